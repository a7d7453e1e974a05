#pragma once

#include "qsm/state.hpp"

namespace qsm {

inline constexpr double kProbabilityFloor = 1e-300;

/// N x V complex matrix with M M^dagger = I_N; column k is |m_k>.
class MeasurementMatrix {
 public:
  MeasurementMatrix() = default;

  /// Validates M M^dagger = I within tol and V >= N.
  static MeasurementMatrix from_orthonormal(CMatrix m, double tol = 1e-10);

  const CMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  Eigen::Index outcomes() const noexcept { return m_.cols(); }
  CVector column(Eigen::Index k) const { return m_.col(k); }

  /// max |M M^dagger - I|.
  double resolution_defect() const;

 private:
  explicit MeasurementMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

/// M = Q^dagger where Q is the uniquely normalized thin-QR factor of raw^dagger.
/// Throws DegenerateMeasurement if raw is row-rank deficient or V < N.
MeasurementMatrix project_measurement(const CMatrix& raw);

/// Same, also returning the QR factors of raw^dagger for differentiation.
MeasurementMatrix project_measurement(const CMatrix& raw, QrFactors& factors);

/// Pulls a gradient with respect to M = Q^dagger back to the raw matrix
/// through the thin-QR differential. Gradients use g = dL/dRe + i dL/dIm.
CMatrix project_measurement_backward(const QrFactors& factors, const CMatrix& grad_m);

/// p_k = |<m_k|psi>|^2.
RVector born_probabilities(const MeasurementMatrix& meas, const WaveState& psi);
RVector born_probabilities(const CMatrix& m, const CVector& c);

/// p~_k = sum_j |m_k[j]|^2 |c_j|^2, renormalized: the Born rule with every
/// cross term between basis amplitudes dropped.
RVector diagonal_only_probabilities(const MeasurementMatrix& meas, const WaveState& psi);

/// rho = psi psi^dagger.
CMatrix density_matrix(const WaveState& psi);

/// log(max(p, kProbabilityFloor)); sets `floored` when the clamp applied.
double floored_log(double p, bool& floored);

}  // namespace qsm
