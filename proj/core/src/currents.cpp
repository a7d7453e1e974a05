#include "qsm/currents.hpp"

namespace qsm {

double CurrentMatrix::antisymmetry_defect() const {
  if (j.size() == 0) return 0.0;
  return (j + j.transpose()).cwiseAbs().maxCoeff();
}

namespace {

CurrentMatrix current_from_amplitudes(const CMatrix& h, const CVector& c) {
  const Eigen::Index n = c.size();
  CurrentMatrix out{RMatrix::Zero(n, n)};
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double flow = 2.0 * (h(a, b) * std::conj(c(a)) * c(b)).imag();
      out.j(a, b) = flow;
      out.j(b, a) = -flow;
    }
  return out;
}

}  // namespace

CurrentMatrix continuous_current(const CMatrix& h, const WaveState& psi) {
  require(h.rows() == psi.dim() && h.cols() == psi.dim(), ErrorKind::Shape, "Hamiltonian and state disagree in N");
  require(hermiticity_defect(h) <= 1e-10, ErrorKind::Shape, "Hamiltonian is not Hermitian within 1e-10");
  return current_from_amplitudes(h, psi.amplitudes());
}

CurrentMatrix midpoint_current(const CMatrix& h, const WaveState& psi_pre, const WaveState& psi_post) {
  require(psi_pre.dim() == psi_post.dim(), ErrorKind::Shape, "pre- and post-step states disagree in N");
  require(h.rows() == psi_pre.dim() && h.cols() == psi_pre.dim(), ErrorKind::Shape,
          "Hamiltonian and state disagree in N");
  const CVector mid = 0.5 * (psi_pre.amplitudes() + psi_post.amplitudes());
  return current_from_amplitudes(h, mid);
}

std::vector<CurrentMatrix> channel_currents(const InteractionFactors& f, const WaveState& psi) {
  f.validate();
  require(f.dim() == psi.dim(), ErrorKind::Shape, "interaction factors and state disagree in N");
  const Eigen::Index n = psi.dim();
  const CVector& c = psi.amplitudes();
  std::vector<CurrentMatrix> out;
  out.reserve(static_cast<std::size_t>(f.rank()));
  for (Eigen::Index a = 0; a < f.rank(); ++a) {
    // u_j = Phi_ja conj(c_j), so Phi_ja conj(Phi_ka) conj(c_j) c_k = u_j conj(u_k)
    const CVector u = f.phi.col(a).cwiseProduct(c.conjugate());
    CurrentMatrix m{RMatrix::Zero(n, n)};
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const double flow = 2.0 * (u(j) * std::conj(u(k))).imag();
        m.j(j, k) = flow;
        m.j(k, j) = -flow;
      }
    out.push_back(std::move(m));
  }
  return out;
}

double total_current(const CurrentMatrix& j) {
  double total = 0.0;
  for (Eigen::Index a = 0; a < j.dim(); ++a)
    for (Eigen::Index b = a + 1; b < j.dim(); ++b) total += std::abs(j.j(a, b));
  return total;
}

}  // namespace qsm
