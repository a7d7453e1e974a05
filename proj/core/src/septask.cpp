#include "qsm/septask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "qsm/dynamics.hpp"

namespace qsm {

std::vector<long> task_sequence(Eigen::Index n, long i, long j, long filler_length) {
  require(n >= 1 && i >= 0 && i < n && j >= 0 && j < n, ErrorKind::Vocabulary, "task indices out of range");
  require(filler_length >= 0, ErrorKind::Configuration, "filler length must be >= 0");
  std::vector<long> seq;
  seq.reserve(static_cast<std::size_t>(filler_length) + 2);
  seq.push_back(context_token(i));
  seq.insert(seq.end(), static_cast<std::size_t>(filler_length), filler_token(n));
  seq.push_back(query_token(n, j));
  return seq;
}

CVector TaskInstance::final_state(long i, long j) const {
  return query_unitaries.at(static_cast<std::size_t>(j)) * context_states.at(static_cast<std::size_t>(i)).amplitudes();
}

void TaskInstance::validate() const {
  require(n >= 2, ErrorKind::InvalidDimension, "task dimension must be >= 2");
  require(static_cast<Eigen::Index>(context_states.size()) == n &&
              static_cast<Eigen::Index>(query_unitaries.size()) == n,
          ErrorKind::Shape, "task needs N context states and N query unitaries");
  for (const auto& s : context_states) require(s.dim() == n, ErrorKind::Shape, "context state dimension mismatch");
  for (const auto& w : query_unitaries)
    require(w.rows() == n && w.cols() == n, ErrorKind::Shape, "query unitary dimension mismatch");
  require(measurement.dim() == n, ErrorKind::Shape, "measurement dimension mismatch");
  require(filler_length >= 0, ErrorKind::Configuration, "filler length must be >= 0");
}

RMatrix density_stack(const std::vector<WaveState>& states, const std::vector<CMatrix>& unitaries) {
  require(!states.empty() && states.size() == unitaries.size(), ErrorKind::Shape,
          "need equally many context states and query unitaries");
  const Eigen::Index n = states.front().dim();
  const HermitianBasis basis(n);
  const auto count = static_cast<Eigen::Index>(states.size());
  RMatrix r(count * count, basis.size());
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < count; ++j) {
      const CVector phi = unitaries[static_cast<std::size_t>(j)] * states[static_cast<std::size_t>(i)].amplitudes();
      const CMatrix rho = phi * phi.adjoint();
      r.row(i * count + j) = vec_hermitian(rho, basis).transpose();
    }
  return r;
}

PositionCertificate check_general_position(const std::vector<WaveState>& states,
                                           const std::vector<CMatrix>& unitaries) {
  const RMatrix r = density_stack(states, unitaries);
  const Eigen::Index n = states.front().dim();
  return {numerical_rank(r), n * n};
}

GeneralPositionSample sample_general_position(Eigen::Index n, std::uint64_t seed) {
  require(n >= 2, ErrorKind::InvalidDimension, "task dimension must be >= 2");
  Rng rng(seed);
  GeneralPositionSample out;
  constexpr int kMaxDraws = 16;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    out.states.clear();
    out.unitaries.clear();
    for (Eigen::Index i = 0; i < n; ++i) out.states.push_back(WaveState::normalize(sample_unit_vector(n, rng)));
    for (Eigen::Index j = 0; j < n; ++j) out.unitaries.push_back(sample_haar_unitary(n, rng));
    const auto cert = check_general_position(out.states, out.unitaries);
    out.certificate_rank = cert.rank;
    if (cert.ok()) return out;
    ++out.resamples;
  }
  fail(ErrorKind::InvariantViolation, "no general-position configuration after 16 draws");
}

Eigen::Index measurement_rank(const MeasurementMatrix& meas) {
  const HermitianBasis basis(meas.dim());
  RMatrix stack(meas.outcomes(), basis.size());
  for (Eigen::Index k = 0; k < meas.outcomes(); ++k) {
    const CVector m = meas.column(k);
    stack.row(k) = vec_hermitian(m * m.adjoint(), basis).transpose();
  }
  return numerical_rank(stack);
}

namespace {

CMatrix projector_frame(Eigen::Index n) {
  const double s = 1.0 / std::numbers::sqrt2;
  CMatrix v = CMatrix::Zero(n, n * n);
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < n; ++j) v(j, col++) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      v(j, col) = s;
      v(k, col) = s;
      ++col;
    }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      v(j, col) = s;
      v(k, col) = Complex(0.0, s);
      ++col;
    }
  return v;
}

}  // namespace

MeasurementMatrix build_ic_measurement(Eigen::Index n, std::uint64_t seed) {
  require(n >= 2, ErrorKind::InvalidDimension, "IC measurement needs N >= 2");
  Rng rng(seed);
  CMatrix frame = projector_frame(n);
  constexpr int kMaxRetries = 8;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    const CMatrix s = frame * frame.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(s);
    const RVector ev = eig.eigenvalues();
    if (ev.minCoeff() > 1e-12 * ev.maxCoeff()) {
      const CMatrix inv_sqrt =
          eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
      auto meas = MeasurementMatrix::from_orthonormal(inv_sqrt * frame);
      if (measurement_rank(meas) == n * n) return meas;
    }
    frame += 1e-3 * sample_ginibre(n, n * n, rng);
  }
  fail(ErrorKind::DegenerateMeasurement, "could not build an informationally complete measurement");
}

RVector n2_coordinates(const CMatrix& rho) {
  require(rho.rows() == 2 && rho.cols() == 2, ErrorKind::Shape, "coordinates are defined for 2x2 matrices");
  RVector c(4);
  c << rho(0, 0).real(), rho(0, 1).real(), rho(0, 1).imag(), rho(1, 1).real();
  return c;
}

N2Reference n2_reference_config() {
  const double s = 1.0 / std::numbers::sqrt2;
  N2Reference ref;
  CVector psi1(2);
  psi1 << s, Complex(0.0, s);
  ref.states = {WaveState::basis(2, 0), WaveState::unchecked(psi1)};
  CMatrix w1(2, 2);
  w1 << s, s, s, -s;
  ref.unitaries = {CMatrix::Identity(2, 2), w1};

  ref.coordinates.resize(4, 4);
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j) {
      const CVector phi = ref.unitaries[static_cast<std::size_t>(j)] * ref.states[static_cast<std::size_t>(i)].amplitudes();
      const auto idx = static_cast<std::size_t>(i * 2 + j);
      ref.rho[idx] = phi * phi.adjoint();
      ref.coordinates.row(static_cast<Eigen::Index>(idx)) = n2_coordinates(ref.rho[idx]).transpose();
    }
  ref.det = ref.coordinates.determinant();
  return ref;
}

TaskInstance make_task(Eigen::Index n, std::uint64_t seed, long filler_length) {
  auto sample = sample_general_position(n, seed);
  TaskInstance task;
  task.n = n;
  task.context_states = std::move(sample.states);
  task.query_unitaries = std::move(sample.unitaries);
  task.measurement = build_ic_measurement(n, seed);
  task.filler_length = filler_length;
  task.seed = seed;
  task.validate();
  return task;
}

TaskInstance reference_task(long filler_length) {
  auto ref = n2_reference_config();
  TaskInstance task;
  task.n = 2;
  task.context_states = std::move(ref.states);
  task.query_unitaries = std::move(ref.unitaries);
  task.measurement = build_ic_measurement(2, 0);
  task.filler_length = filler_length;
  task.validate();
  return task;
}

TargetTable target_table(const TaskInstance& task) {
  task.validate();
  const Eigen::Index n = task.n;
  const Eigen::Index v = task.vocab();
  TargetTable t;
  t.pstar.resize(n * n, v);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      t.pstar.row(i * n + j) = born_probabilities(task.measurement.matrix(), task.final_state(i, j)).transpose();

  t.min_entry = t.pstar.minCoeff();
  t.near_orthogonal = t.min_entry < 1e-14;
  t.lstar.resize(n * n, v);
  for (Eigen::Index r = 0; r < t.pstar.rows(); ++r)
    for (Eigen::Index k = 0; k < v; ++k) t.lstar(r, k) = floored_log(t.pstar(r, k), t.floored);
  t.logodds = t.lstar.rightCols(v - 1).colwise() - t.lstar.col(0);
  return t;
}

SeparationRanks check_separation_ranks(const TargetTable& table, Eigen::Index n) {
  SeparationRanks out;
  out.rank_p = numerical_rank(table.pstar);
  out.rank_l = numerical_rank(table.lstar);
  out.rank_logodds = table.logodds.cols() > 0 ? numerical_rank(table.logodds) : 0;
  out.lstar_full_rank = out.rank_l == n * n;
  return out;
}

CMatrix basis_change_unitary(const WaveState& src, const WaveState& dst) {
  require(src.dim() == dst.dim(), ErrorKind::Shape, "states disagree in N");
  require(std::abs(src.norm() - 1.0) < kStateNormTolerance && std::abs(dst.norm() - 1.0) < kStateNormTolerance,
          ErrorKind::Shape, "basis change needs unit vectors");
  const Eigen::Index n = src.dim();
  if ((src.amplitudes() - dst.amplitudes()).norm() < 1e-12) return CMatrix::Identity(n, n);

  auto complete = [n](const CVector& v) {
    // Fixed seed so the completion, and hence U, is reproducible.
    Rng rng(0x5eedULL);
    for (int attempt = 0; attempt < 8; ++attempt) {
      CMatrix a(n, n);
      a.col(0) = v;
      if (n > 1) a.rightCols(n - 1) = sample_ginibre(n, n - 1, rng);
      try {
        return thin_qr_unique(a).q;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateFactorization) throw;
      }
    }
    fail(ErrorKind::DegenerateFactorization, "could not complete vector to a unitary");
  };
  return complete(dst.amplitudes()) * complete(src.amplitudes()).adjoint();
}

Cusm build_exact_cusm(const TaskInstance& task) {
  task.validate();
  const Eigen::Index n = task.n;
  Cusm c;
  c.psi0 = WaveState::basis(n, 0);
  c.unitaries.resize(static_cast<std::size_t>(task_alphabet_size(n)));
  for (long i = 0; i < n; ++i)
    c.unitaries[static_cast<std::size_t>(context_token(i))] =
        basis_change_unitary(c.psi0, task.context_states[static_cast<std::size_t>(i)]);
  for (long j = 0; j < n; ++j)
    c.unitaries[static_cast<std::size_t>(query_token(n, j))] = task.query_unitaries[static_cast<std::size_t>(j)];
  c.unitaries[static_cast<std::size_t>(filler_token(n))] = CMatrix::Identity(n, n);
  c.measurement = task.measurement;
  return c;
}

std::vector<RVector> cusm_forward(const Cusm& cusm, const std::vector<long>& tokens) {
  const auto traj = evolve_fixed_unitaries(cusm.unitaries, cusm.psi0, tokens);
  std::vector<RVector> out;
  out.reserve(tokens.size());
  for (std::size_t t = 1; t < traj.size(); ++t) out.push_back(born_probabilities(cusm.measurement, traj[t]));
  return out;
}

RMatrix real_cayley(const RMatrix& skew) {
  require(skew.rows() == skew.cols(), ErrorKind::Shape, "generator must be square");
  require((skew + skew.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, skew.cwiseAbs().maxCoeff()),
          ErrorKind::Shape, "generator must be skew-symmetric");
  const Eigen::Index d = skew.rows();
  const RMatrix id = RMatrix::Identity(d, d);
  return (id + skew).partialPivLu().solve(id - skew);
}

RMatrix RosmParams::transition(long token) const {
  require(token >= 0 && static_cast<std::size_t>(token) < generators.size(), ErrorKind::Vocabulary,
          "no ROSM transition for token " + std::to_string(token));
  return real_cayley(generators[static_cast<std::size_t>(token)]);
}

void RosmParams::validate() const {
  require(d >= 1 && h0.size() == d, ErrorKind::Configuration, "ROSM initial state must have width d");
  require(std::abs(h0.norm() - 1.0) < 1e-10, ErrorKind::Configuration, "ROSM initial state must be a unit vector");
  for (const auto& g : generators)
    require(g.rows() == d && g.cols() == d, ErrorKind::Configuration, "ROSM generator width mismatch");
  require(w.cols() == d && bias.size() == w.rows(), ErrorKind::Configuration, "ROSM readout shape mismatch");
}

RosmParams random_rosm(Eigen::Index d, Eigen::Index vocab_in, Eigen::Index vocab_out, std::uint64_t seed,
                       double generator_scale) {
  require(d >= 1 && vocab_in >= 1 && vocab_out >= 1, ErrorKind::Configuration, "ROSM dimensions must be >= 1");
  Rng rng(seed);
  RosmParams p;
  p.d = d;
  p.h0.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) p.h0(i) = rng.normal();
  p.h0.normalize();
  for (Eigen::Index x = 0; x < vocab_in; ++x) {
    RMatrix g(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r < d; ++r) g(r, c) = rng.normal();
    p.generators.push_back(0.5 * generator_scale * (g - g.transpose()));
  }
  p.w.resize(vocab_out, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < vocab_out; ++r) p.w(r, c) = rng.normal();
  p.bias.resize(vocab_out);
  for (Eigen::Index k = 0; k < vocab_out; ++k) p.bias(k) = rng.normal();
  return p;
}

RVector log_softmax(const RVector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

std::vector<RVector> rosm_forward(const RosmParams& rosm, const std::vector<long>& tokens) {
  rosm.validate();
  std::vector<RVector> out;
  out.reserve(tokens.size());
  RVector h = rosm.h0;
  for (long x : tokens) {
    h = rosm.transition(x) * h;
    out.push_back(log_softmax(rosm.w * h + rosm.bias).array().exp());
  }
  return out;
}

RMatrix rosm_log_prob_matrix(const RosmParams& rosm, const TaskInstance& task) {
  rosm.validate();
  const Eigen::Index n = task.n;
  std::vector<RMatrix> q;
  q.reserve(rosm.generators.size());
  for (std::size_t x = 0; x < rosm.generators.size(); ++x) q.push_back(rosm.transition(static_cast<long>(x)));
  RMatrix lbar(n * n, rosm.vocab_out());
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      RVector h = rosm.h0;
      for (long x : task_sequence(n, i, j, task.filler_length)) {
        require(x >= 0 && static_cast<std::size_t>(x) < q.size(), ErrorKind::Vocabulary, "token outside ROSM alphabet");
        h = q[static_cast<std::size_t>(x)] * h;
      }
      lbar.row(i * n + j) = log_softmax(rosm.w * h + rosm.bias).transpose();
    }
  return lbar;
}

SoftmaxAudit softmax_rank_audit(const RosmParams& rosm, const TaskInstance& task) {
  SoftmaxAudit a;
  a.rank_lbar = numerical_rank(rosm_log_prob_matrix(rosm, task));
  a.bound = rosm.d + 2;
  a.satisfied = a.rank_lbar <= a.bound;
  return a;
}

}  // namespace qsm
