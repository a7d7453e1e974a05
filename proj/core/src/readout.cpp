#include "qsm/readout.hpp"

#include <cmath>
#include <string>

namespace qsm {

MeasurementMatrix MeasurementMatrix::from_orthonormal(CMatrix m, double tol) {
  require(m.rows() >= 1 && m.cols() >= m.rows(), ErrorKind::Shape, "measurement must be N x V with V >= N");
  MeasurementMatrix out(std::move(m));
  const double defect = out.resolution_defect();
  require(defect <= tol, ErrorKind::DegenerateMeasurement,
          "M M^dagger deviates from the identity by " + std::to_string(defect));
  return out;
}

double MeasurementMatrix::resolution_defect() const {
  return (m_ * m_.adjoint() - CMatrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

MeasurementMatrix project_measurement(const CMatrix& raw) {
  QrFactors factors;
  return project_measurement(raw, factors);
}

MeasurementMatrix project_measurement(const CMatrix& raw, QrFactors& factors) {
  require(raw.rows() >= 1 && raw.cols() >= raw.rows(), ErrorKind::DegenerateMeasurement,
          "raw measurement must be N x V with V >= N");
  try {
    factors = thin_qr_unique(raw.adjoint());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateFactorization)
      fail(ErrorKind::DegenerateMeasurement, "raw measurement is row-rank deficient");
    throw;
  }
  return MeasurementMatrix::from_orthonormal(factors.q.adjoint(), 1e-9);
}

CMatrix project_measurement_backward(const QrFactors& factors, const CMatrix& grad_m) {
  const CMatrix& q = factors.q;
  const CMatrix& r = factors.r;
  const Eigen::Index n = r.rows();
  const CMatrix gq = grad_m.adjoint();

  const CMatrix p = gq.adjoint() * q;
  const CMatrix s = p - p.adjoint();
  CMatrix f = CMatrix::Zero(n, n);
  f.triangularView<Eigen::StrictlyUpper>() = s;
  for (Eigen::Index i = 0; i < n; ++i) f(i, i) = Complex(0.0, p(i, i).imag());

  CMatrix ga = gq - q * (q.adjoint() * gq) + q * f.adjoint();
  // ga <- ga R^{-dagger}, i.e. solve X R^dagger = ga.
  r.adjoint().triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(ga);
  return ga.adjoint();
}

RVector born_probabilities(const CMatrix& m, const CVector& c) {
  require(m.rows() == c.size(), ErrorKind::Shape, "measurement and state disagree in N");
  return (m.adjoint() * c).cwiseAbs2();
}

RVector born_probabilities(const MeasurementMatrix& meas, const WaveState& psi) {
  return born_probabilities(meas.matrix(), psi.amplitudes());
}

RVector diagonal_only_probabilities(const MeasurementMatrix& meas, const WaveState& psi) {
  require(meas.dim() == psi.dim(), ErrorKind::Shape, "measurement and state disagree in N");
  const RVector occ = psi.occupations();
  RVector p = meas.matrix().cwiseAbs2().transpose() * occ;
  const double total = p.sum();
  require(total > 0.0 && std::isfinite(total), ErrorKind::InvariantViolation,
          "diagonal-only readout has a zero normalizer");
  return p / total;
}

CMatrix density_matrix(const WaveState& psi) { return psi.amplitudes() * psi.amplitudes().adjoint(); }

double floored_log(double p, bool& floored) {
  if (!(p >= kProbabilityFloor)) {
    floored = true;
    return std::log(kProbabilityFloor);
  }
  return std::log(p);
}

}  // namespace qsm
