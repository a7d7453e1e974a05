#include "qsm/state.hpp"

#include <cmath>
#include <string>

namespace qsm {

WaveState WaveState::from_unit(CVector amplitudes, double tol) {
  const double n = amplitudes.norm();
  require(std::abs(n - 1.0) < tol, ErrorKind::Shape,
          "state norm " + std::to_string(n) + " is not within tolerance of 1");
  return WaveState(std::move(amplitudes));
}

WaveState WaveState::normalize(CVector amplitudes) {
  const double n = amplitudes.norm();
  require(n > 0.0 && std::isfinite(n), ErrorKind::DegenerateInitialization,
          "cannot normalize a zero or non-finite amplitude vector");
  amplitudes /= n;
  return WaveState(std::move(amplitudes));
}

WaveState WaveState::basis(Eigen::Index dim, Eigen::Index index) {
  require(dim >= 1 && index >= 0 && index < dim, ErrorKind::InvalidDimension, "basis index out of range");
  CVector c = CVector::Zero(dim);
  c(index) = 1.0;
  return WaveState(std::move(c));
}

CMatrix InteractionFactors::materialize() const {
  CMatrix h = phi * phi.adjoint();
  h.diagonal() += delta.cast<Complex>();
  return h;
}

void InteractionFactors::validate() const {
  require(phi.cols() >= 1, ErrorKind::Shape, "interaction rank r must be >= 1");
  require(phi.rows() == delta.size(), ErrorKind::Shape, "phi rows and delta length disagree");
}

WaveState to_schrodinger(const WaveState& interaction_state, const FreeHamiltonian& h0, double time) {
  require(h0.dim() == interaction_state.dim(), ErrorKind::Shape, "free Hamiltonian dimension mismatch");
  CVector c = interaction_state.amplitudes();
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, -h0.frequencies(j) * time);
  return WaveState::unchecked(std::move(c));
}

WaveState to_interaction(const WaveState& schrodinger_state, const FreeHamiltonian& h0, double time) {
  require(h0.dim() == schrodinger_state.dim(), ErrorKind::Shape, "free Hamiltonian dimension mismatch");
  CVector c = schrodinger_state.amplitudes();
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, h0.frequencies(j) * time);
  return WaveState::unchecked(std::move(c));
}

}  // namespace qsm
