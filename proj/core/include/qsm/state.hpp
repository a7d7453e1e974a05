#pragma once

#include "qsm/numerics.hpp"

namespace qsm {

inline constexpr double kStateNormTolerance = 1e-9;

/// Unit-norm complex amplitude vector, the recurrent state.
class WaveState {
 public:
  WaveState() = default;

  /// Validates |‖c‖ - 1| < tol.
  static WaveState from_unit(CVector amplitudes, double tol = kStateNormTolerance);

  /// Divides by the norm. Throws DegenerateInitialization on a zero vector.
  static WaveState normalize(CVector amplitudes);

  /// For results that are unit norm by construction (unitary images). Skips
  /// the check; callers that can drift use from_unit or normalize.
  static WaveState unchecked(CVector amplitudes) { return WaveState(std::move(amplitudes)); }

  /// Standard basis vector e_index.
  static WaveState basis(Eigen::Index dim, Eigen::Index index);

  const CVector& amplitudes() const noexcept { return c_; }
  Complex operator[](Eigen::Index j) const { return c_(j); }
  Eigen::Index dim() const noexcept { return c_.size(); }
  double norm() const { return c_.norm(); }

  /// Occupation probabilities p_j = |c_j|^2.
  RVector occupations() const { return c_.cwiseAbs2(); }

 private:
  explicit WaveState(CVector c) : c_(std::move(c)) {}
  CVector c_;
};

/// H_0 = diag(lambda).
struct FreeHamiltonian {
  RVector frequencies;

  Eigen::Index dim() const noexcept { return frequencies.size(); }
};

/// H_int = Phi Phi^dagger + diag(delta).
struct InteractionFactors {
  CMatrix phi;       // N x r
  RVector delta;     // N
  long time_index = 0;

  Eigen::Index dim() const noexcept { return phi.rows(); }
  Eigen::Index rank() const noexcept { return phi.cols(); }

  /// Dense N x N Hermitian matrix; O(N^2 r).
  CMatrix materialize() const;

  /// Throws Shape if phi and delta disagree or r < 1.
  void validate() const;
};

/// Schroedinger-picture state from an interaction-picture state at continuous
/// time `time`: c_j = exp(-i lambda_j time) [c_I]_j.
WaveState to_schrodinger(const WaveState& interaction_state, const FreeHamiltonian& h0, double time);

/// Inverse map: [c_I]_j = exp(i lambda_j time) c_j.
WaveState to_interaction(const WaveState& schrodinger_state, const FreeHamiltonian& h0, double time);

}  // namespace qsm
