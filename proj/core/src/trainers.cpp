#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "qsm/currents.hpp"
#include "qsm/train.hpp"

namespace qsm {

namespace {

using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;
using Checker = std::function<void(const std::vector<double>&, InvariantTally&)>;

struct TaskData {
  const TaskInstance* task = nullptr;
  TargetTable table;
  std::vector<std::vector<long>> sequences;  // row i*N + j
  std::vector<RVector> targets;
  Eigen::Index vocab_in = 0;
  Eigen::Index vocab_out = 0;
};

TaskData prepare(const TaskInstance& task) {
  TaskData data;
  data.task = &task;
  data.table = target_table(task);
  for (long i = 0; i < task.n; ++i)
    for (long j = 0; j < task.n; ++j) {
      data.sequences.push_back(task_sequence(task.n, i, j, task.filler_length));
      data.targets.push_back(data.table.pstar.row(i * task.n + j).transpose());
    }
  data.vocab_in = task_alphabet_size(task.n);
  data.vocab_out = task.vocab();
  return data;
}

/// Cross-entropy of p against q and dl/dp.
double cross_entropy(const RVector& q, const RVector& p, RVector& dldp, bool& floored) {
  double loss = 0.0;
  dldp.setZero(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (q(k) == 0.0) continue;
    loss -= q(k) * floored_log(p(k), floored);
    dldp(k) = -q(k) / std::max(p(k), kProbabilityFloor);
  }
  return loss;
}

/// Flat-vector cursor shared by the model packers below.
struct Cursor {
  const std::vector<double>& x;
  std::size_t i = 0;
  double next() { return x[i++]; }
};

// ---------------------------------------------------------------------------
// Trainable CUSM: psi0 = (a + ib)/‖a + ib‖, W_x = Cayley(H_x) with H_x given
// by its Hermitian-basis coefficients, readout either Born through the QR
// projection of a raw N' x V matrix or an affine softmax on [Re c; Im c].

struct CusmModel {
  Eigen::Index n = 0;
  Eigen::Index vocab_in = 0;
  Eigen::Index vocab_out = 0;
  bool softmax = false;
  RVector a, b;
  std::vector<RVector> h;  // N'^2 coefficients per token
  CMatrix meas_raw;        // Born readout
  RMatrix u;               // softmax readout, V x 2N'
  RVector bias;

  std::size_t size() const {
    std::size_t s = static_cast<std::size_t>(2 * n + vocab_in * n * n);
    return s + (softmax ? static_cast<std::size_t>(u.size() + bias.size()) : static_cast<std::size_t>(2 * meas_raw.size()));
  }

  std::vector<double> pack() const {
    std::vector<double> x;
    x.reserve(size());
    for (Eigen::Index j = 0; j < n; ++j) x.push_back(a(j));
    for (Eigen::Index j = 0; j < n; ++j) x.push_back(b(j));
    for (const auto& hx : h)
      for (Eigen::Index k = 0; k < hx.size(); ++k) x.push_back(hx(k));
    if (softmax) {
      for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c) x.push_back(u(r, c));
      for (Eigen::Index k = 0; k < bias.size(); ++k) x.push_back(bias(k));
    } else {
      for (Eigen::Index r = 0; r < meas_raw.rows(); ++r)
        for (Eigen::Index c = 0; c < meas_raw.cols(); ++c) {
          x.push_back(meas_raw(r, c).real());
          x.push_back(meas_raw(r, c).imag());
        }
    }
    return x;
  }

  void unpack(const std::vector<double>& x) {
    Cursor cur{x};
    for (Eigen::Index j = 0; j < n; ++j) a(j) = cur.next();
    for (Eigen::Index j = 0; j < n; ++j) b(j) = cur.next();
    for (auto& hx : h)
      for (Eigen::Index k = 0; k < hx.size(); ++k) hx(k) = cur.next();
    if (softmax) {
      for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c) u(r, c) = cur.next();
      for (Eigen::Index k = 0; k < bias.size(); ++k) bias(k) = cur.next();
    } else {
      for (Eigen::Index r = 0; r < meas_raw.rows(); ++r)
        for (Eigen::Index c = 0; c < meas_raw.cols(); ++c) {
          const double re = cur.next();
          const double im = cur.next();
          meas_raw(r, c) = Complex(re, im);
        }
    }
  }
};

CusmModel init_cusm(const TaskData& data, Eigen::Index n, bool softmax, double scale, std::uint64_t seed) {
  require(n >= 1, ErrorKind::Configuration, "CUSM dimension must be >= 1");
  require(softmax || data.vocab_out >= n, ErrorKind::Configuration, "Born readout needs V >= N'");
  Rng rng(seed);
  CusmModel m;
  m.n = n;
  m.vocab_in = data.vocab_in;
  m.vocab_out = data.vocab_out;
  m.softmax = softmax;
  m.a.resize(n);
  m.b.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m.a(j) = rng.normal();
    m.b(j) = rng.normal();
  }
  for (Eigen::Index x = 0; x < m.vocab_in; ++x) {
    RVector hx(n * n);
    for (Eigen::Index k = 0; k < hx.size(); ++k) hx(k) = scale * rng.normal();
    m.h.push_back(std::move(hx));
  }
  if (softmax) {
    m.u.resize(m.vocab_out, 2 * n);
    for (Eigen::Index c = 0; c < m.u.cols(); ++c)
      for (Eigen::Index r = 0; r < m.u.rows(); ++r) m.u(r, c) = rng.normal() / std::sqrt(static_cast<double>(2 * n));
    m.bias = RVector::Zero(m.vocab_out);
  } else {
    m.meas_raw = sample_ginibre(n, m.vocab_out, rng);
  }
  return m;
}

struct CusmForwardCache {
  std::vector<CMatrix> hams;
  std::vector<Eigen::PartialPivLU<CMatrix>> a_lu;  // I + (i/2) H
  std::vector<Eigen::PartialPivLU<CMatrix>> b_lu;  // I - (i/2) H
  std::vector<CMatrix> w;
};

const Complex kHalfI(0.0, 0.5);

CusmForwardCache cusm_unitaries(const CusmModel& m, const HermitianBasis& basis) {
  CusmForwardCache c;
  const CMatrix id = CMatrix::Identity(m.n, m.n);
  for (const auto& hx : m.h) {
    CMatrix ham = unvec_hermitian(hx, basis);
    c.a_lu.emplace_back(id + kHalfI * ham);
    c.b_lu.emplace_back(id - kHalfI * ham);
    c.w.push_back(c.a_lu.back().solve(id - kHalfI * ham));
    c.hams.push_back(std::move(ham));
  }
  return c;
}

Cusm to_cusm(const CusmModel& m) {
  Cusm c;
  CVector v(m.n);
  for (Eigen::Index j = 0; j < m.n; ++j) v(j) = Complex(m.a(j), m.b(j));
  c.psi0 = WaveState::normalize(v);
  c.unitaries = cusm_unitaries(m, HermitianBasis(m.n)).w;
  c.measurement = project_measurement(m.meas_raw);
  return c;
}

double cusm_objective(const CusmModel& m, const TaskData& data, const HermitianBasis& basis,
                      std::vector<double>* flat_grad) {
  const auto cache = cusm_unitaries(m, basis);
  QrFactors qr;
  CMatrix meas;
  if (!m.softmax) meas = project_measurement(m.meas_raw, qr).matrix();

  CVector v(m.n);
  for (Eigen::Index j = 0; j < m.n; ++j) v(j) = Complex(m.a(j), m.b(j));
  const double vnorm = v.norm();
  require(vnorm > 0.0, ErrorKind::DegenerateInitialization, "CUSM initial-state parameters vanished");
  const CVector c0 = v / vnorm;

  std::vector<CMatrix> grad_h(static_cast<std::size_t>(m.vocab_in), CMatrix::Zero(m.n, m.n));
  CMatrix grad_meas = CMatrix::Zero(m.n, m.vocab_out);
  RMatrix grad_u = RMatrix::Zero(m.u.rows(), m.u.cols());
  RVector grad_bias = RVector::Zero(m.bias.size());
  CVector grad_c0 = CVector::Zero(m.n);

  bool floored = false;
  double loss = 0.0;
  std::vector<CVector> states;
  RVector dldp;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const auto& seq = data.sequences[s];
    states.assign(1, c0);
    for (long x : seq) states.push_back(cache.w[static_cast<std::size_t>(x)] * states.back());
    const CVector& c = states.back();

    CVector g;
    if (m.softmax) {
      RVector feat(2 * m.n);
      feat << c.real(), c.imag();
      const RVector logp = log_softmax(m.u * feat + m.bias);
      const RVector p = logp.array().exp();
      for (Eigen::Index k = 0; k < p.size(); ++k)
        if (data.targets[s](k) != 0.0) loss -= data.targets[s](k) * logp(k);
      if (!flat_grad) continue;
      const RVector glogit = p - data.targets[s];
      grad_u.noalias() += glogit * feat.transpose();
      grad_bias += glogit;
      const RVector gfeat = m.u.transpose() * glogit;
      g.resize(m.n);
      for (Eigen::Index j = 0; j < m.n; ++j) g(j) = Complex(gfeat(j), gfeat(m.n + j));
    } else {
      const CVector z = meas.adjoint() * c;
      loss += cross_entropy(data.targets[s], z.cwiseAbs2(), dldp, floored);
      if (!flat_grad) continue;
      const CVector gz = 2.0 * z.cwiseProduct(dldp.cast<Complex>());
      grad_meas.noalias() += c * gz.adjoint();
      g = meas * gz;
    }

    for (std::size_t t = seq.size(); t-- > 0;) {
      const auto x = static_cast<std::size_t>(seq[t]);
      const CVector mu = cache.b_lu[x].solve(g);
      const CVector w = states[t] + states[t + 1];
      // dL/dH = -Herm((i/2) w mu^dagger)
      const CMatrix y = kHalfI * (w * mu.adjoint());
      grad_h[x] -= 0.5 * (y + y.adjoint());
      g = mu + kHalfI * (cache.hams[x] * mu);
    }
    grad_c0 += g;
  }

  const double count = static_cast<double>(data.sequences.size());
  loss /= count;
  if (flat_grad) {
    CusmModel gm = m;
    const CVector gv = (grad_c0 - c0 * c0.dot(grad_c0).real()) / vnorm;
    gm.a = gv.real() / count;
    gm.b = gv.imag() / count;
    for (std::size_t x = 0; x < grad_h.size(); ++x) gm.h[x] = vec_hermitian(grad_h[x], basis, 1e-8) / count;
    if (m.softmax) {
      gm.u = grad_u / count;
      gm.bias = grad_bias / count;
    } else {
      gm.meas_raw = project_measurement_backward(qr, grad_meas) / count;
    }
    *flat_grad = gm.pack();
  }
  return loss;
}

void check_cusm(const CusmModel& m, const TaskData& data, const HermitianBasis& basis, InvariantTally& tally) {
  const auto cache = cusm_unitaries(m, basis);
  double unitarity = 0.0;
  for (const auto& w : cache.w) unitarity = std::max(unitarity, unitarity_defect(w));
  tally.record(unitarity < 1e-10, "CUSM transition unitarity defect " + std::to_string(unitarity));

  CVector v(m.n);
  for (Eigen::Index j = 0; j < m.n; ++j) v(j) = Complex(m.a(j), m.b(j));
  const WaveState psi0 = WaveState::normalize(v);

  MeasurementMatrix meas;
  if (!m.softmax) {
    meas = project_measurement(m.meas_raw);
    tally.record(meas.resolution_defect() < 1e-10, "measurement resolution of identity violated");
  }

  double norm_err = 0.0, sum_err = 0.0, balance_err = 0.0;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const auto traj = evolve_fixed_unitaries(cache.w, psi0, data.sequences[s]);
    for (std::size_t t = 1; t < traj.size(); ++t) {
      norm_err = std::max(norm_err, std::abs(traj[t].norm() - 1.0));
      const auto x = static_cast<std::size_t>(data.sequences[s][t - 1]);
      const CurrentMatrix jm = midpoint_current(cache.hams[x], traj[t - 1], traj[t]);
      const RVector dp = traj[t].occupations() - traj[t - 1].occupations();
      balance_err = std::max(balance_err, (dp - jm.row_sums()).cwiseAbs().maxCoeff());
    }
    if (!m.softmax) sum_err = std::max(sum_err, std::abs(born_probabilities(meas, traj.back()).sum() - 1.0));
  }
  tally.record(norm_err < 1e-10, "CUSM state norm drift " + std::to_string(norm_err));
  tally.record(balance_err < 1e-11, "midpoint current balance residual " + std::to_string(balance_err));
  if (!m.softmax) tally.record(sum_err < 1e-10, "Born probabilities do not sum to one");
}

// ---------------------------------------------------------------------------
// ROSM: h0 = u/‖u‖, Q_x = Cayley(A_x) with A_x skew-symmetric from its strict
// upper triangle, readout softmax(W h + b).

struct RosmModel {
  Eigen::Index d = 0;
  Eigen::Index vocab_in = 0;
  Eigen::Index vocab_out = 0;
  RVector u;
  std::vector<RVector> s;  // d(d-1)/2 per token
  RMatrix w;
  RVector bias;

  std::vector<double> pack() const {
    std::vector<double> x;
    for (Eigen::Index i = 0; i < d; ++i) x.push_back(u(i));
    for (const auto& sx : s)
      for (Eigen::Index k = 0; k < sx.size(); ++k) x.push_back(sx(k));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) x.push_back(w(r, c));
    for (Eigen::Index k = 0; k < bias.size(); ++k) x.push_back(bias(k));
    return x;
  }

  void unpack(const std::vector<double>& x) {
    Cursor cur{x};
    for (Eigen::Index i = 0; i < d; ++i) u(i) = cur.next();
    for (auto& sx : s)
      for (Eigen::Index k = 0; k < sx.size(); ++k) sx(k) = cur.next();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = cur.next();
    for (Eigen::Index k = 0; k < bias.size(); ++k) bias(k) = cur.next();
  }

  RMatrix skew(std::size_t x) const {
    RMatrix a = RMatrix::Zero(d, d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j) {
        a(i, j) = s[x](k);
        a(j, i) = -s[x](k);
        ++k;
      }
    return a;
  }

  RosmParams params() const {
    RosmParams p;
    p.d = d;
    p.h0 = u.normalized();
    for (std::size_t x = 0; x < s.size(); ++x) p.generators.push_back(skew(x));
    p.w = w;
    p.bias = bias;
    return p;
  }
};

RosmModel init_rosm(const TaskData& data, Eigen::Index d, double scale, std::uint64_t seed) {
  require(d >= 1, ErrorKind::Configuration, "ROSM width d must be >= 1");
  Rng rng(seed);
  RosmModel m;
  m.d = d;
  m.vocab_in = data.vocab_in;
  m.vocab_out = data.vocab_out;
  m.u.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) m.u(i) = rng.normal();
  for (Eigen::Index x = 0; x < m.vocab_in; ++x) {
    RVector sx(d * (d - 1) / 2);
    for (Eigen::Index k = 0; k < sx.size(); ++k) sx(k) = scale * rng.normal();
    m.s.push_back(std::move(sx));
  }
  m.w.resize(m.vocab_out, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < m.vocab_out; ++r) m.w(r, c) = rng.normal() / std::sqrt(static_cast<double>(d));
  m.bias = RVector::Zero(m.vocab_out);
  return m;
}

double rosm_objective(const RosmModel& m, const TaskData& data, std::vector<double>* flat_grad) {
  const Eigen::Index d = m.d;
  const RMatrix id = RMatrix::Identity(d, d);
  std::vector<RMatrix> skews, q;
  std::vector<Eigen::PartialPivLU<RMatrix>> minus_lu;  // I - A
  for (std::size_t x = 0; x < m.s.size(); ++x) {
    skews.push_back(m.skew(x));
    q.push_back((id + skews.back()).partialPivLu().solve(id - skews.back()));
    minus_lu.emplace_back(id - skews.back());
  }
  const double unorm = m.u.norm();
  require(unorm > 0.0, ErrorKind::DegenerateInitialization, "ROSM initial-state parameters vanished");
  const RVector h0 = m.u / unorm;

  RosmModel gm = m;
  for (auto& sx : gm.s) sx.setZero();
  gm.w.setZero();
  gm.bias.setZero();
  RVector grad_h0 = RVector::Zero(d);

  double loss = 0.0;
  std::vector<RVector> hs;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const auto& seq = data.sequences[s];
    hs.assign(1, h0);
    for (long x : seq) hs.push_back(q[static_cast<std::size_t>(x)] * hs.back());
    const RVector logp = log_softmax(m.w * hs.back() + m.bias);
    for (Eigen::Index k = 0; k < logp.size(); ++k)
      if (data.targets[s](k) != 0.0) loss -= data.targets[s](k) * logp(k);
    if (!flat_grad) continue;

    const RVector glogit = logp.array().exp().matrix() - data.targets[s];
    gm.w.noalias() += glogit * hs.back().transpose();
    gm.bias += glogit;
    RVector g = m.w.transpose() * glogit;
    for (std::size_t t = seq.size(); t-- > 0;) {
      const auto x = static_cast<std::size_t>(seq[t]);
      const RVector mu = minus_lu[x].solve(g);
      const RVector w = hs[t] + hs[t + 1];
      Eigen::Index k = 0;
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = a + 1; b < d; ++b) gm.s[x](k++) -= mu(a) * w(b) - mu(b) * w(a);
      g = mu + skews[x] * mu;
    }
    grad_h0 += g;
  }
  const double count = static_cast<double>(data.sequences.size());
  loss /= count;
  if (flat_grad) {
    gm.u = (grad_h0 - h0 * h0.dot(grad_h0)) / unorm / count;
    for (auto& sx : gm.s) sx /= count;
    gm.w /= count;
    gm.bias /= count;
    *flat_grad = gm.pack();
  }
  return loss;
}

void check_rosm(const RosmModel& m, const TaskData& data, InvariantTally& tally) {
  const RosmParams p = m.params();
  double orth = 0.0;
  for (std::size_t x = 0; x < p.generators.size(); ++x) {
    const RMatrix q = p.transition(static_cast<long>(x));
    orth = std::max(orth, (q.transpose() * q - RMatrix::Identity(m.d, m.d)).cwiseAbs().maxCoeff());
  }
  tally.record(orth < 1e-10, "ROSM transition orthogonality defect " + std::to_string(orth));
  double norm_err = 0.0;
  for (const auto& seq : data.sequences) {
    RVector h = p.h0;
    for (long x : seq) {
      h = p.transition(x) * h;
      norm_err = std::max(norm_err, std::abs(h.norm() - 1.0));
    }
  }
  tally.record(norm_err < 1e-10, "ROSM state norm drift " + std::to_string(norm_err));
  const auto audit = softmax_rank_audit(p, *data.task);
  tally.record(audit.satisfied, "softmax rank bound violated: rank " + std::to_string(audit.rank_lbar));
}

// ---------------------------------------------------------------------------
// Full model on the task: cross-entropy against P* at the final step only.

std::vector<StepTarget> final_step_target(const std::vector<long>& seq, const RVector& q) {
  std::vector<StepTarget> targets(seq.size());
  targets.back().distribution = q;
  return targets;
}

double full_objective(FullModelParams& model, const TaskData& data, std::vector<double>* flat_grad,
                      std::size_t& warnings) {
  const double count = static_cast<double>(data.sequences.size());
  double loss = 0.0;
  if (!flat_grad) {
    for (std::size_t s = 0; s < data.sequences.size(); ++s)
      loss += full_model_loss(model, data.sequences[s], final_step_target(data.sequences[s], data.targets[s]));
    return loss / count;
  }
  std::vector<double> total(parameter_count(model), 0.0);
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const auto g = backward_full_model(model, data.sequences[s], final_step_target(data.sequences[s], data.targets[s]));
    loss += g.loss;
    warnings += g.condition_warnings;
    const auto flat = pack(g.grad);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += flat[i];
  }
  for (double& x : total) x /= count;
  *flat_grad = std::move(total);
  return loss / count;
}

void check_full(const FullModelParams& model, const TaskData& data, InvariantTally& tally) {
  const auto meas = project_measurement(model.meas_raw);
  tally.record(meas.resolution_defect() < 1e-10, "measurement resolution of identity violated");
  double norm_err = 0.0, equiv_err = 0.0, balance_err = 0.0, sum_err = 0.0;
  for (const auto& seq : data.sequences) {
    const auto traj = evolve_full_model(model, seq);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      norm_err = std::max(norm_err, std::abs(traj.states[t + 1].norm() - 1.0));
      const CMatrix h = traj.ip_factors[t].materialize();
      const WaveState dense = cayley_step_dense(h, traj.states[t], model.dt);
      equiv_err = std::max(equiv_err, (dense.amplitudes() - traj.states[t + 1].amplitudes()).cwiseAbs().maxCoeff());
      const CurrentMatrix jm = midpoint_current(h, traj.states[t], traj.states[t + 1]);
      const RVector dp = traj.states[t + 1].occupations() - traj.states[t].occupations();
      balance_err = std::max(balance_err, (dp - model.dt * jm.row_sums()).cwiseAbs().maxCoeff());
      const RVector p = born_probabilities(meas, traj.schrodinger(t + 1, model.h0, model.dt));
      sum_err = std::max(sum_err, std::abs(p.sum() - 1.0));
    }
  }
  tally.record(norm_err < 1e-10, "full-model state norm drift " + std::to_string(norm_err));
  tally.record(equiv_err < 1e-10, "Woodbury and dense steps disagree by " + std::to_string(equiv_err));
  tally.record(balance_err < 1e-11, "midpoint current balance residual " + std::to_string(balance_err));
  tally.record(sum_err < 1e-10, "Born probabilities do not sum to one");
}

TrainReport run_loop(const Objective& objective, std::vector<double> x, const Checker& checker,
                     const TrainConfig& cfg, double floor) {
  TrainReport report;
  report.entropy_floor = floor;
  const auto start = std::chrono::steady_clock::now();
  Adam adam(x.size(), cfg.adam);
  std::vector<double> g;
  report.stop_reason = "max-epochs";
  try {
    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double loss = objective(x, g);
      report.loss_trace.push_back(loss);
      report.epochs_run = epoch + 1;
      if (!std::isfinite(loss)) {
        report.stop_reason = "diverged";
        report.diagnosis = "loss became non-finite at epoch " + std::to_string(epoch);
        break;
      }
      if (loss - floor < cfg.early_stop_gap) {
        report.stop_reason = "early-stop";
        break;
      }
      clip_gradient(g, cfg.clip_norm);
      const double lr = cfg.cosine ? cosine_lr(cfg.adam.lr, epoch, cfg.epochs) : cfg.adam.lr;
      adam.step(x, g, lr);
      if (cfg.check_every > 0 && (epoch + 1) % cfg.check_every == 0) checker(x, report.invariants);
    }
    std::vector<double> unused;
    report.final_loss = report.stop_reason == "diverged" ? report.loss_trace.back() : objective(x, unused);
    checker(x, report.invariants);
  } catch (const Error& e) {
    report.stop_reason = "diverged";
    report.diagnosis = e.what();
    report.final_loss = std::numeric_limits<double>::quiet_NaN();
  }
  report.gap = report.final_loss - floor;
  report.zero_gap = std::isfinite(report.gap) && report.gap < cfg.zero_gap;
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

std::vector<TrainReport> train_on_task(const TaskInstance& task, const TrainConfig& config,
                                       const std::vector<std::uint64_t>& seeds) {
  require(config.epochs >= 1, ErrorKind::Configuration, "epochs must be >= 1");
  require(config.adam.lr > 0.0, ErrorKind::Configuration, "learning rate must be positive");
  const TaskData data = prepare(task);
  const double floor = entropy_floor(data.table);
  std::vector<TrainReport> reports;

  for (std::uint64_t seed : seeds) {
    TrainReport report;
    Eigen::Index model_dim = 0;
    switch (config.kind) {
      case ModelKind::CusmTrainable:
      case ModelKind::CusmSoftmax: {
        const bool softmax = config.kind == ModelKind::CusmSoftmax;
        model_dim = config.model_dim > 0 ? config.model_dim : task.n;
        const HermitianBasis basis(model_dim);
        CusmModel m = init_cusm(data, model_dim, softmax, config.init_scale, seed);
        CusmModel probe = m;
        auto objective = [&](const std::vector<double>& x, std::vector<double>& g) {
          probe.unpack(x);
          return cusm_objective(probe, data, basis, &g);
        };
        auto checker = [&](const std::vector<double>& x, InvariantTally& tally) {
          probe.unpack(x);
          check_cusm(probe, data, basis, tally);
        };
        report = run_loop(objective, m.pack(), checker, config, floor);
        if (config.ablation && !softmax && report.stop_reason != "diverged") report.ablation = readout_ablation(to_cusm(probe), task);
        break;
      }
      case ModelKind::Rosm: {
        model_dim = config.rosm_d;
        RosmModel m = init_rosm(data, config.rosm_d, config.init_scale, seed);
        RosmModel probe = m;
        auto objective = [&](const std::vector<double>& x, std::vector<double>& g) {
          probe.unpack(x);
          return rosm_objective(probe, data, &g);
        };
        auto checker = [&](const std::vector<double>& x, InvariantTally& tally) {
          probe.unpack(x);
          check_rosm(probe, data, tally);
        };
        report = run_loop(objective, m.pack(), checker, config, floor);
        report.audit = softmax_rank_audit(probe.params(), task);
        break;
      }
      case ModelKind::Full: {
        model_dim = config.model_dim > 0 ? config.model_dim : task.n;
        ModelDims dims;
        dims.n = model_dim;
        dims.r = config.full_rank;
        dims.d = config.full_embed;
        dims.vocab_in = data.vocab_in;
        dims.vocab_out = data.vocab_out;
        dims.dt = 1.0;
        FullModelParams probe = init_full_model(dims, seed);
        std::size_t warnings = 0;
        auto objective = [&](const std::vector<double>& x, std::vector<double>& g) {
          unpack(x, probe);
          return full_objective(probe, data, &g, warnings);
        };
        auto checker = [&](const std::vector<double>& x, InvariantTally& tally) {
          unpack(x, probe);
          check_full(probe, data, tally);
        };
        report = run_loop(objective, pack(probe), checker, config, floor);
        report.condition_warnings = warnings;
        if (config.ablation && report.stop_reason != "diverged") {
          const auto meas = project_measurement(probe.meas_raw);
          AblationResult ab;
          for (std::size_t s = 0; s < data.sequences.size(); ++s) {
            const auto traj = evolve_full_model(probe, data.sequences[s]);
            const WaveState psi = traj.schrodinger(data.sequences[s].size(), probe.h0, probe.dt);
            const RVector pb = born_probabilities(meas, psi);
            const RVector pd = diagonal_only_probabilities(meas, psi);
            for (Eigen::Index k = 0; k < pb.size(); ++k) {
              const double q = data.targets[s](k);
              if (q == 0.0) continue;
              ab.nll_born -= q * floored_log(pb(k), ab.floored);
              ab.nll_diagonal -= q * floored_log(pd(k), ab.floored);
            }
          }
          ab.nll_born /= static_cast<double>(data.sequences.size());
          ab.nll_diagonal /= static_cast<double>(data.sequences.size());
          report.ablation = ab;
        }
        break;
      }
    }
    report.kind = config.kind;
    report.seed = seed;
    report.task_seed = task.seed;
    report.task_n = task.n;
    report.model_dim = model_dim;
    reports.push_back(std::move(report));
  }
  return reports;
}

TrainerGradientCheck check_trainer_gradient(const TaskInstance& task, const TrainConfig& config, std::uint64_t seed,
                                            double step) {
  const TaskData data = prepare(task);
  std::function<double(const std::vector<double>&, std::vector<double>*)> eval;
  std::vector<double> x;
  // The closures below hold these by reference.
  const Eigen::Index dim = config.model_dim > 0 ? config.model_dim : task.n;
  const HermitianBasis basis(dim);
  CusmModel cusm;
  RosmModel rosm;
  FullModelParams full;
  std::size_t warnings = 0;
  switch (config.kind) {
    case ModelKind::CusmTrainable:
    case ModelKind::CusmSoftmax:
      cusm = init_cusm(data, dim, config.kind == ModelKind::CusmSoftmax, config.init_scale, seed);
      x = cusm.pack();
      eval = [&](const std::vector<double>& v, std::vector<double>* g) {
        cusm.unpack(v);
        return cusm_objective(cusm, data, basis, g);
      };
      break;
    case ModelKind::Rosm:
      rosm = init_rosm(data, config.rosm_d, config.init_scale, seed);
      x = rosm.pack();
      eval = [&](const std::vector<double>& v, std::vector<double>* g) {
        rosm.unpack(v);
        return rosm_objective(rosm, data, g);
      };
      break;
    case ModelKind::Full: {
      ModelDims dims;
      dims.n = dim;
      dims.r = config.full_rank;
      dims.d = config.full_embed;
      dims.vocab_in = data.vocab_in;
      dims.vocab_out = data.vocab_out;
      full = init_full_model(dims, seed);
      x = pack(full);
      eval = [&](const std::vector<double>& v, std::vector<double>* g) {
        unpack(v, full);
        return full_objective(full, data, g, warnings);
      };
      break;
    }
  }
  std::vector<double> analytic;
  eval(x, &analytic);
  const auto numeric = central_difference(
      [&](std::span<const double> v) { return eval(std::vector<double>(v.begin(), v.end()), nullptr); }, x, step);
  TrainerGradientCheck out;
  out.coordinates = x.size();
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.max_abs_error = std::max(out.max_abs_error, std::abs(analytic[k] - numeric[k]));
    if (!gradient_close(analytic[k], numeric[k])) ++out.failures;
  }
  return out;
}

}  // namespace qsm
