#include "qsm/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qsm {

double nll_loss(const std::vector<RVector>& probs, const std::vector<long>& targets, bool* floored) {
  require(probs.size() == targets.size(), ErrorKind::Shape, "probability trajectory and targets differ in length");
  bool any_floor = false;
  double loss = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (targets[t] < 0) continue;
    require(targets[t] < probs[t].size(), ErrorKind::Vocabulary, "target token outside the output vocabulary");
    loss -= floored_log(probs[t](targets[t]), any_floor);
  }
  if (floored) *floored = any_floor;
  return loss;
}

double entropy_floor(const TargetTable& table) {
  const RMatrix& p = table.pstar;
  // 0 log 0 = 0
  const RMatrix plogp = (p.array() > 0.0).select(p.array() * p.array().log(), 0.0);
  return -plogp.sum() / static_cast<double>(p.rows());
}

std::vector<StepTarget> token_targets(const std::vector<long>& targets) {
  std::vector<StepTarget> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) out[t].token = targets[t];
  return out;
}

namespace {

/// Loss of one step and, optionally, dl/dp.
double step_loss(const StepTarget& target, const RVector& p, RVector* dldp, bool& floored) {
  double loss = 0.0;
  if (dldp) dldp->setZero(p.size());
  if (target.token >= 0) {
    require(target.token < p.size(), ErrorKind::Vocabulary, "target token outside the output vocabulary");
    const double pk = p(target.token);
    loss -= floored_log(pk, floored);
    if (dldp) (*dldp)(target.token) -= 1.0 / std::max(pk, kProbabilityFloor);
  }
  if (target.distribution.size() > 0) {
    require(target.distribution.size() == p.size(), ErrorKind::Shape, "target distribution width mismatch");
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double q = target.distribution(k);
      if (q == 0.0) continue;
      loss -= q * floored_log(p(k), floored);
      if (dldp) (*dldp)(k) -= q / std::max(p(k), kProbabilityFloor);
    }
  }
  return loss;
}

CVector phase_rotate(const CVector& c, const RVector& lambda, double time) {
  CVector out(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) out(j) = c(j) * std::polar(1.0, lambda(j) * time);
  return out;
}

}  // namespace

double full_model_loss(const FullModelParams& model, const std::vector<long>& tokens,
                       const std::vector<StepTarget>& targets, bool* floored) {
  require(targets.size() == tokens.size(), ErrorKind::Shape, "tokens and targets differ in length");
  const auto traj = evolve_full_model(model, tokens);
  const CMatrix m = project_measurement(model.meas_raw).matrix();
  bool any_floor = false;
  double loss = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (!targets[t].active()) continue;
    const double time = static_cast<double>(t + 1) * model.dt;
    const CVector s = phase_rotate(traj.states[t + 1].amplitudes(), model.h0.frequencies, -time);
    loss += step_loss(targets[t], born_probabilities(m, s), nullptr, any_floor);
  }
  if (floored) *floored = any_floor;
  return loss;
}

GradientBundle backward_full_model(const FullModelParams& model, const std::vector<long>& tokens,
                                   const std::vector<StepTarget>& targets) {
  require(targets.size() == tokens.size(), ErrorKind::Shape, "tokens and targets differ in length");
  const auto traj = evolve_full_model(model, tokens);
  QrFactors qr;
  const CMatrix m = project_measurement(model.meas_raw, qr).matrix();
  const Eigen::Index n = model.dim();
  const Eigen::Index d = model.embed.dim();
  const double dt = model.dt;
  const RVector& lambda = model.h0.frequencies;
  const std::size_t steps = tokens.size();

  GradientBundle out;
  out.grad = zeros_like(model);
  out.condition_warnings = traj.warnings();
  CMatrix grad_m = CMatrix::Zero(n, model.vocab_out());
  RVector& grad_lambda = out.grad.h0.frequencies;

  // Gradient of the readout at boundary `idx` (prediction idx - 1) with
  // respect to the interaction-picture state there.
  RVector dldp;
  auto readout_grad = [&](std::size_t idx) -> CVector {
    const StepTarget& target = targets[idx - 1];
    if (!target.active()) return CVector::Zero(n);
    const double time = static_cast<double>(idx) * dt;
    const CVector s = phase_rotate(traj.states[idx].amplitudes(), lambda, -time);
    const CVector z = m.adjoint() * s;
    const RVector p = z.cwiseAbs2();
    out.loss += step_loss(target, p, &dldp, out.floored);
    const CVector gz = 2.0 * z.cwiseProduct(dldp.cast<Complex>());
    grad_m.noalias() += s * gz.adjoint();
    const CVector gs = m * gz;
    for (Eigen::Index j = 0; j < n; ++j) grad_lambda(j) += (std::conj(gs(j)) * Complex(0.0, -time) * s(j)).real();
    return phase_rotate(gs, lambda, time);
  };

  CVector g = steps > 0 ? readout_grad(steps) : CVector::Zero(n);
  WoodburyWorkspace ws;
  MlpCache cache;
  for (std::size_t t = steps; t-- > 0;) {
    const InteractionFactors& fi = traj.ip_factors[t];
    CayleyStepAdjoint adj;
    try {
      adj = cayley_step_adjoint(fi, traj.states[t].amplitudes(), traj.states[t + 1].amplitudes(), dt, g, ws);
    } catch (const IllConditionedStepError& e) {
      throw IllConditionedStepError(std::string(e.what()) + " in adjoint at step " + std::to_string(t), e.report(),
                                    static_cast<long>(t));
    }

    const double tau = traj.phase_times[t];
    CMatrix grad_phi(n, fi.rank());
    for (Eigen::Index j = 0; j < n; ++j) {
      grad_phi.row(j) = adj.grad_phi.row(j) * std::polar(1.0, -lambda(j) * tau);
      for (Eigen::Index a = 0; a < fi.rank(); ++a)
        grad_lambda(j) += (std::conj(adj.grad_phi(j, a)) * Complex(0.0, tau) * fi.phi(j, a)).real();
    }

    const RVector e = model.embed.row(tokens[t]);
    mlp_forward(model.mlp, interaction_input(e, traj.states[t]), cache);
    const RVector gx =
        mlp_backward(model.mlp, cache, output_from_factor_gradients(grad_phi, adj.grad_delta), out.grad.mlp);
    out.grad.embed.vectors.row(tokens[t]) += gx.head(d).transpose();

    g = adj.grad_psi;
    for (Eigen::Index j = 0; j < n; ++j) g(j) += Complex(gx(d + j), gx(d + n + j));
    if (t >= 1) g += readout_grad(t);
  }

  // psi(0) = v / ‖v‖ with v = a + ib.
  CVector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v(j) = Complex(model.init.a(j), model.init.b(j));
  const double norm = v.norm();
  const CVector c = v / norm;
  const CVector gv = (g - c * c.dot(g).real()) / norm;
  out.grad.init.a = gv.real();
  out.grad.init.b = gv.imag();

  out.grad.meas_raw = project_measurement_backward(qr, grad_m);
  return out;
}

GradientBundle backward_full_model(const FullModelParams& model, const std::vector<long>& tokens,
                                   const std::vector<long>& targets) {
  return backward_full_model(model, tokens, token_targets(targets));
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

GradientBundle finite_difference_grad(const FullModelParams& model, const std::vector<long>& tokens,
                                      const std::vector<StepTarget>& targets, double step) {
  require(step >= 1e-7 && step <= 1e-3, ErrorKind::Configuration, "finite-difference step must lie in [1e-7, 1e-3]");
  FullModelParams probe = model;
  auto f = [&](std::span<const double> x) {
    unpack(x, probe);
    return full_model_loss(probe, tokens, targets);
  };
  const auto x = pack(model);
  const auto g = central_difference(f, x, step);
  GradientBundle out;
  out.grad = zeros_like(model);
  unpack(g, out.grad);
  out.loss = full_model_loss(model, tokens, targets, &out.floored);
  return out;
}

GradientBundle finite_difference_grad(const FullModelParams& model, const std::vector<long>& tokens,
                                      const std::vector<long>& targets, double step) {
  return finite_difference_grad(model, tokens, token_targets(targets), step);
}

bool gradient_close(double analytic, double numeric, double rel, double abs_floor) {
  return std::abs(analytic - numeric) <= std::max(rel * std::abs(numeric), abs_floor);
}

Adam::Adam(std::size_t size, AdamConfig config) : cfg_(config), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
  require(params.size() == m_.size() && grads.size() == m_.size(), ErrorKind::Shape, "Adam state size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
  }
}

double cosine_lr(double lr0, long epoch, long total) {
  if (total <= 0) return lr0;
  const double frac = std::clamp(static_cast<double>(epoch) / static_cast<double>(total), 0.0, 1.0);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * frac));
}

double clip_gradient(std::vector<double>& g, double max_norm) {
  double sq = 0.0;
  for (double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& x : g) x *= scale;
  }
  return norm;
}

AblationResult readout_ablation(const FullModelParams& model, const std::vector<std::vector<long>>& sequences,
                                const std::vector<std::vector<long>>& targets) {
  require(sequences.size() == targets.size(), ErrorKind::Shape, "sequences and targets differ in count");
  const auto meas = project_measurement(model.meas_raw);
  AblationResult out;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    require(sequences[s].size() == targets[s].size(), ErrorKind::Shape, "tokens and targets differ in length");
    const auto traj = evolve_full_model(model, sequences[s]);
    for (std::size_t t = 0; t < sequences[s].size(); ++t) {
      const long y = targets[s][t];
      if (y < 0) continue;
      require(y < meas.outcomes(), ErrorKind::Vocabulary, "target token outside the output vocabulary");
      const WaveState psi = traj.schrodinger(t + 1, model.h0, model.dt);
      out.nll_born -= floored_log(born_probabilities(meas, psi)(y), out.floored);
      out.nll_diagonal -= floored_log(diagonal_only_probabilities(meas, psi)(y), out.floored);
    }
  }
  return out;
}

AblationResult readout_ablation(const Cusm& cusm, const TaskInstance& task) {
  const auto table = target_table(task);
  const Eigen::Index n = task.n;
  AblationResult out;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const auto traj = evolve_fixed_unitaries(cusm.unitaries, cusm.psi0, task_sequence(n, i, j, task.filler_length));
      const RVector pb = born_probabilities(cusm.measurement, traj.back());
      const RVector pd = diagonal_only_probabilities(cusm.measurement, traj.back());
      const RVector q = table.pstar.row(i * n + j).transpose();
      for (Eigen::Index k = 0; k < q.size(); ++k) {
        if (q(k) == 0.0) continue;
        out.nll_born -= q(k) * floored_log(pb(k), out.floored);
        out.nll_diagonal -= q(k) * floored_log(pd(k), out.floored);
      }
    }
  out.nll_born /= static_cast<double>(n * n);
  out.nll_diagonal /= static_cast<double>(n * n);
  return out;
}

void InvariantTally::record(bool ok, const std::string& what) {
  ++checks;
  if (!ok) {
    ++failures;
    if (messages.size() < 32) messages.push_back(what);
  }
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::CusmTrainable: return "cusm-trainable";
    case ModelKind::CusmSoftmax: return "cusm-softmax";
    case ModelKind::Rosm: return "rosm";
    case ModelKind::Full: return "full";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cusm-trainable" || name == "cusm") return ModelKind::CusmTrainable;
  if (name == "cusm-softmax") return ModelKind::CusmSoftmax;
  if (name == "rosm") return ModelKind::Rosm;
  if (name == "full") return ModelKind::Full;
  fail(ErrorKind::Configuration, "unknown model kind '" + name + "'");
}

}  // namespace qsm
