#pragma once

#include <vector>

#include "qsm/state.hpp"

namespace qsm {

/// Pairwise probability flows: j(a, b) is the rate of flow into a from b.
struct CurrentMatrix {
  RMatrix j;

  Eigen::Index dim() const noexcept { return j.rows(); }

  /// Net inflow per component: dp/dt (continuous) or Δp/Δt (midpoint).
  RVector row_sums() const { return j.rowwise().sum(); }

  /// max |J + J^T|.
  double antisymmetry_defect() const;
};

/// J_{j<-k} = 2 Im(H_jk conj(c_j) c_k).
CurrentMatrix continuous_current(const CMatrix& h, const WaveState& psi);

/// Same formula on the averaged amplitudes (c + c')/2. When psi_post is the
/// Cayley step of psi_pre under h and dt, Δp_j = dt * sum_k J_{j<-k} holds
/// exactly.
CurrentMatrix midpoint_current(const CMatrix& h, const WaveState& psi_pre, const WaveState& psi_post);

/// Contribution of each rank-one channel Phi_a Phi_a^dagger to the
/// off-diagonal current.
std::vector<CurrentMatrix> channel_currents(const InteractionFactors& f, const WaveState& psi);

/// sum_{j<k} |J_{j<-k}|.
double total_current(const CurrentMatrix& j);

}  // namespace qsm
