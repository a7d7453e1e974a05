#include "qsm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qsm {

InteractionFactors interaction_picture_factors(const InteractionFactors& f, const FreeHamiltonian& h0, double time) {
  require(h0.dim() == f.dim(), ErrorKind::Shape, "free Hamiltonian and interaction factors disagree in N");
  InteractionFactors out = f;
  for (Eigen::Index j = 0; j < f.dim(); ++j) {
    const Complex phase = std::polar(1.0, h0.frequencies(j) * time);
    out.phi.row(j) *= phase;
  }
  return out;
}

InteractionFactors interaction_picture_factors(const InteractionFactors& f, const FreeHamiltonian& h0, long t,
                                               double dt) {
  InteractionFactors out = interaction_picture_factors(f, h0, step_phase_time(t, dt));
  out.time_index = t;
  return out;
}

CMatrix cayley_unitary(const CMatrix& h, double dt) {
  require(h.rows() == h.cols() && h.rows() >= 1, ErrorKind::Shape, "Hamiltonian must be square");
  require(hermiticity_defect(h) <= 1e-10, ErrorKind::Shape, "Hamiltonian is not Hermitian within 1e-10");
  require(dt > 0.0, ErrorKind::Configuration, "dt must be positive");
  const Complex alpha(0.0, dt / 2);
  const Eigen::Index n = h.rows();
  const CMatrix a = CMatrix::Identity(n, n) + alpha * h;
  const CMatrix b = CMatrix::Identity(n, n) - alpha * h;
  return a.partialPivLu().solve(b);
}

WaveState cayley_step_dense(const CMatrix& h, const WaveState& psi, double dt) {
  require(h.rows() == h.cols() && h.rows() == psi.dim(), ErrorKind::Shape, "Hamiltonian and state disagree in N");
  require(hermiticity_defect(h) <= 1e-10, ErrorKind::Shape, "Hamiltonian is not Hermitian within 1e-10");
  require(dt > 0.0, ErrorKind::Configuration, "dt must be positive");
  const Complex alpha(0.0, dt / 2);
  CMatrix a = alpha * h;
  const CVector rhs = psi.amplitudes() - a * psi.amplitudes();
  a.diagonal().array() += 1.0;
  return WaveState::unchecked(a.partialPivLu().solve(rhs));
}

void apply_shifted(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& v, CVector& out,
                   CVector& small) {
  small.noalias() = phi.adjoint() * v;
  out.noalias() = phi * small;
  out += delta.cwiseProduct(v);
  out *= beta;
  out += v;
}

CVector apply_shifted(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& v) {
  CVector out;
  CVector small;
  apply_shifted(phi, delta, beta, v, out, small);
  return out;
}

double woodbury_solve(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& b, CVector& x,
                      WoodburyWorkspace& ws) {
  const Eigen::Index n = phi.rows();
  const Eigen::Index r = phi.cols();
  ws.dinv.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) ws.dinv(j) = 1.0 / (1.0 + beta * delta(j));
  ws.y = ws.dinv.cwiseProduct(b);
  ws.dphi = ws.dinv.asDiagonal() * phi;

  ws.gram.resize(r, r);
  ws.gram.noalias() = beta * (phi.adjoint() * ws.dphi);
  ws.gram.diagonal().array() += 1.0;
  ws.z.noalias() = phi.adjoint() * ws.y;

  ws.lu.compute(ws.gram);
  const double rcond = ws.lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  ws.tmp = ws.lu.solve(ws.z);

  x = ws.y;
  x.noalias() -= beta * (ws.dphi * ws.tmp);
  return cond;
}

namespace {

void check_step_inputs(const InteractionFactors& f, Eigen::Index dim, double dt) {
  f.validate();
  require(f.dim() == dim, ErrorKind::Shape, "interaction factors and state disagree in N");
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::Configuration, "dt must be positive");
}

}  // namespace

std::pair<WaveState, CayleyStepReport> cayley_step_woodbury(const InteractionFactors& f, const WaveState& psi,
                                                            double dt) {
  WoodburyWorkspace ws;
  return cayley_step_woodbury(f, psi, dt, ws);
}

CayleyStepReport cayley_step_woodbury_inplace(const InteractionFactors& f, CVector& c, double dt,
                                              WoodburyWorkspace& ws) {
  check_step_inputs(f, c.size(), dt);
  const Complex alpha(0.0, dt / 2);
  apply_shifted(f.phi, f.delta, -alpha, c, ws.b, ws.small);
  const CVector& b = ws.b;
  CVector& x = ws.x;

  CayleyStepReport report;
  report.gram_condition = woodbury_solve(f.phi, f.delta, alpha, b, x, ws);
  report.warning = report.gram_condition > kGramWarnCondition;
  if (!(report.gram_condition <= kGramFailCondition))
    throw IllConditionedStepError("Gram matrix condition estimate " + std::to_string(report.gram_condition) +
                                      " exceeds 1e12",
                                  report, f.time_index);

  apply_shifted(f.phi, f.delta, alpha, x, ws.applied, ws.small);
  report.residual = (ws.applied - b).norm();
  report.renorm_delta = std::abs(x.norm() - 1.0);
  // The Woodbury update cancels terms of size ‖b‖, so a correct solve leaves a
  // residual of order eps ‖A‖ ‖b‖. The bound scales the same way and only
  // catches solves that went wrong.
  const double a_norm = 1.0 + alpha.imag() * (f.phi.squaredNorm() + f.delta.cwiseAbs().maxCoeff());
  if (!x.allFinite() || !(report.residual <= 1e-9 * std::max(1.0, b.norm()) * a_norm))
    throw IllConditionedStepError("Woodbury solve residual " + std::to_string(report.residual) + " too large", report,
                                  f.time_index);
  c.swap(x);
  return report;
}

std::pair<WaveState, CayleyStepReport> cayley_step_woodbury(const InteractionFactors& f, const WaveState& psi,
                                                            double dt, WoodburyWorkspace& ws) {
  CVector c = psi.amplitudes();
  const CayleyStepReport report = cayley_step_woodbury_inplace(f, c, dt, ws);
  return {WaveState::unchecked(std::move(c)), report};
}

CayleyStepAdjoint cayley_step_adjoint(const InteractionFactors& f, const CVector& psi, const CVector& psi_next,
                                      double dt, const CVector& grad_next, WoodburyWorkspace& ws) {
  check_step_inputs(f, psi.size(), dt);
  const Complex alpha(0.0, dt / 2);

  CVector mu;
  CayleyStepReport report;
  report.gram_condition = woodbury_solve(f.phi, f.delta, -alpha, grad_next, mu, ws);
  if (!(report.gram_condition <= kGramFailCondition))
    throw IllConditionedStepError("adjoint Gram matrix is numerically singular", report, f.time_index);

  CayleyStepAdjoint out;
  out.grad_psi = apply_shifted(f.phi, f.delta, alpha, mu);

  const CVector w = psi + psi_next;
  out.grad_delta.resize(f.dim());
  for (Eigen::Index j = 0; j < f.dim(); ++j) out.grad_delta(j) = -(alpha * std::conj(mu(j)) * w(j)).real();

  const CVector v = f.phi.adjoint() * w;
  const CVector q = f.phi.adjoint() * mu;
  out.grad_phi = alpha * (mu * v.adjoint() - w * q.adjoint());
  return out;
}

bool safeguard_renormalize(CVector& c, long step) {
  if (step <= 0 || step % kSafeguardInterval != 0) return false;
  const double n = c.norm();
  if (std::abs(n - 1.0) <= kSafeguardTolerance) return false;
  c /= n;
  return true;
}

namespace {

template <typename Lookup>
std::vector<WaveState> evolve_with(Lookup&& lookup, const WaveState& psi0, const std::vector<long>& tokens) {
  std::vector<WaveState> traj;
  traj.reserve(tokens.size() + 1);
  traj.push_back(psi0);
  CVector c = psi0.amplitudes();
  CVector next(c.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const CMatrix& w = lookup(tokens[t]);
    require(w.rows() == c.size() && w.cols() == c.size(), ErrorKind::Shape,
            "unitary for token " + std::to_string(tokens[t]) + " has the wrong dimension");
    next.noalias() = w * c;
    c.swap(next);
    safeguard_renormalize(c, static_cast<long>(t) + 1);
    traj.push_back(WaveState::unchecked(c));
  }
  return traj;
}

}  // namespace

std::vector<WaveState> evolve_fixed_unitaries(const std::map<long, CMatrix>& unitaries, const WaveState& psi0,
                                              const std::vector<long>& tokens) {
  return evolve_with(
      [&](long token) -> const CMatrix& {
        auto it = unitaries.find(token);
        require(it != unitaries.end(), ErrorKind::Vocabulary, "no unitary for token " + std::to_string(token));
        return it->second;
      },
      psi0, tokens);
}

std::vector<WaveState> evolve_fixed_unitaries(const std::vector<CMatrix>& unitaries, const WaveState& psi0,
                                              const std::vector<long>& tokens) {
  return evolve_with(
      [&](long token) -> const CMatrix& {
        require(token >= 0 && static_cast<std::size_t>(token) < unitaries.size(), ErrorKind::Vocabulary,
                "no unitary for token " + std::to_string(token));
        return unitaries[static_cast<std::size_t>(token)];
      },
      psi0, tokens);
}

WaveState FullTrajectory::schrodinger(std::size_t t, const FreeHamiltonian& h0, double dt) const {
  return to_schrodinger(states.at(t), h0, static_cast<double>(t) * dt);
}

std::size_t FullTrajectory::warnings() const {
  std::size_t count = 0;
  for (const auto& r : reports)
    if (r.warning) ++count;
  return count;
}

FullTrajectory evolve_full_model(const FullModelParams& model, const std::vector<long>& tokens) {
  model.validate();
  const Eigen::Index n = model.dim();
  const Eigen::Index r = model.rank();
  const double dt = model.dt;

  FullTrajectory traj;
  traj.states.reserve(tokens.size() + 1);
  traj.factors.reserve(tokens.size());
  traj.ip_factors.reserve(tokens.size());
  traj.reports.reserve(tokens.size());
  traj.phase_times.reserve(tokens.size());

  WaveState psi = initial_state(model.init);
  traj.states.push_back(psi);
  WoodburyWorkspace ws;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const long step = static_cast<long>(t);
    const RVector e = model.embed.row(tokens[t]);
    InteractionFactors f = factors_from_output(mlp_forward(model.mlp, interaction_input(e, psi)), n, r);
    f.time_index = step;
    const double tau = step_phase_time(step, dt);
    InteractionFactors fi = interaction_picture_factors(f, model.h0, tau);

    std::pair<WaveState, CayleyStepReport> result;
    try {
      result = cayley_step_woodbury(fi, psi, dt, ws);
    } catch (const IllConditionedStepError& e) {
      throw IllConditionedStepError(std::string(e.what()) + " at step " + std::to_string(step), e.report(), step);
    }
    require(result.second.renorm_delta < kStateNormTolerance, ErrorKind::InvariantViolation,
            "state norm drifted at step " + std::to_string(step));

    CVector c = result.first.amplitudes();
    if (safeguard_renormalize(c, step + 1)) ++traj.safeguard_events;
    psi = WaveState::unchecked(std::move(c));

    traj.states.push_back(psi);
    traj.factors.push_back(std::move(f));
    traj.ip_factors.push_back(std::move(fi));
    traj.reports.push_back(result.second);
    traj.phase_times.push_back(tau);
  }
  return traj;
}

}  // namespace qsm
