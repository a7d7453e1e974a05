#include "qsm/hamgen.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qsm {

WaveState initial_state(const InitialStateParams& p) {
  require(p.a.size() == p.b.size() && p.a.size() >= 1, ErrorKind::Shape, "initial-state vectors a and b must match");
  CVector v(p.a.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = Complex(p.a(j), p.b(j));
  return WaveState::normalize(std::move(v));
}

RVector EmbeddingTable::row(long token) const {
  require(token >= 0 && token < vocab(), ErrorKind::Vocabulary,
          "token " + std::to_string(token) + " outside embedding table of size " + std::to_string(vocab()));
  return vectors.row(token).transpose();
}

void MlpParams::validate() const {
  require(!weights.empty() && weights.size() == biases.size(), ErrorKind::Configuration,
          "MLP needs at least one layer and one bias per layer");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == biases[l].size(), ErrorKind::Configuration, "MLP bias width mismatch");
    if (l > 0)
      require(weights[l].cols() == weights[l - 1].rows(), ErrorKind::Configuration, "MLP layer widths do not chain");
  }
}

RVector mlp_forward(const MlpParams& mlp, const RVector& x) {
  require(x.size() == mlp.input_width(), ErrorKind::Configuration, "MLP input width mismatch");
  RVector h = x;
  for (std::size_t l = 0; l < mlp.layers(); ++l) {
    RVector z = mlp.weights[l] * h + mlp.biases[l];
    if (l + 1 < mlp.layers()) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return h;
}

RVector mlp_forward(const MlpParams& mlp, const RVector& x, MlpCache& cache) {
  require(x.size() == mlp.input_width(), ErrorKind::Configuration, "MLP input width mismatch");
  cache.activations.clear();
  cache.activations.reserve(mlp.layers() + 1);
  cache.activations.push_back(x);
  for (std::size_t l = 0; l < mlp.layers(); ++l) {
    RVector z = mlp.weights[l] * cache.activations.back() + mlp.biases[l];
    if (l + 1 < mlp.layers()) z = z.array().tanh().matrix();
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

RVector mlp_backward(const MlpParams& mlp, const MlpCache& cache, const RVector& grad_out, MlpParams& grad) {
  RVector g = grad_out;
  for (std::size_t l = mlp.layers(); l-- > 0;) {
    if (l + 1 < mlp.layers()) {
      // tanh' = 1 - tanh^2, applied to this layer's output
      const RVector& act = cache.activations[l + 1];
      g = g.cwiseProduct((1.0 - act.array().square()).matrix());
    }
    grad.weights[l].noalias() += g * cache.activations[l].transpose();
    grad.biases[l] += g;
    g = mlp.weights[l].transpose() * g;
  }
  return g;
}

MlpParams zeros_like(const MlpParams& mlp) {
  MlpParams z;
  for (const auto& w : mlp.weights) z.weights.push_back(RMatrix::Zero(w.rows(), w.cols()));
  for (const auto& b : mlp.biases) z.biases.push_back(RVector::Zero(b.size()));
  return z;
}

Eigen::Index interaction_rank(const MlpParams& mlp, Eigen::Index dim) {
  const Eigen::Index out = mlp.output_width();
  require(dim >= 1 && out > dim && (out - dim) % (2 * dim) == 0, ErrorKind::Configuration,
          "generator output width " + std::to_string(out) + " is not 2Nr + N for N = " + std::to_string(dim));
  return (out - dim) / (2 * dim);
}

RVector interaction_input(const RVector& embed_vec, const WaveState& state) {
  const Eigen::Index d = embed_vec.size();
  const Eigen::Index n = state.dim();
  RVector x(d + 2 * n);
  x.head(d) = embed_vec;
  x.segment(d, n) = state.amplitudes().real();
  x.tail(n) = state.amplitudes().imag();
  return x;
}

InteractionFactors factors_from_output(const RVector& out, Eigen::Index dim, Eigen::Index rank) {
  require(out.size() == 2 * dim * rank + dim, ErrorKind::Configuration, "generator output width mismatch");
  InteractionFactors f;
  f.phi.resize(dim, rank);
  for (Eigen::Index a = 0; a < rank; ++a)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Eigen::Index k = 2 * (a * dim + j);
      f.phi(j, a) = Complex(out(k), out(k + 1));
    }
  f.delta = out.tail(dim);
  return f;
}

RVector output_from_factor_gradients(const CMatrix& grad_phi, const RVector& grad_delta) {
  const Eigen::Index dim = grad_phi.rows();
  const Eigen::Index rank = grad_phi.cols();
  RVector out(2 * dim * rank + dim);
  for (Eigen::Index a = 0; a < rank; ++a)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Eigen::Index k = 2 * (a * dim + j);
      out(k) = grad_phi(j, a).real();
      out(k + 1) = grad_phi(j, a).imag();
    }
  out.tail(dim) = grad_delta;
  return out;
}

InteractionFactors generate_interaction(const MlpParams& mlp, const RVector& embed_vec, const WaveState& state) {
  mlp.validate();
  const Eigen::Index n = state.dim();
  require(mlp.input_width() == embed_vec.size() + 2 * n, ErrorKind::Configuration,
          "generator input width must be d + 2N");
  const Eigen::Index r = interaction_rank(mlp, n);
  return factors_from_output(mlp_forward(mlp, interaction_input(embed_vec, state)), n, r);
}

void ModelDims::validate() const {
  require(n >= 1 && r >= 1 && d >= 1 && vocab_in >= 1 && vocab_out >= 1, ErrorKind::Configuration,
          "all model dimensions must be >= 1");
  require(vocab_out >= n, ErrorKind::Configuration, "output vocabulary must satisfy V >= N");
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::Configuration, "dt must be positive");
  for (auto h : hidden) require(h >= 1, ErrorKind::Configuration, "hidden widths must be >= 1");
}

ModelDims FullModelParams::dims() const {
  ModelDims d;
  d.n = dim();
  d.r = rank();
  d.d = embed.dim();
  d.vocab_in = embed.vocab();
  d.vocab_out = vocab_out();
  d.dt = dt;
  d.hidden.clear();
  for (std::size_t l = 0; l + 1 < mlp.layers(); ++l) d.hidden.push_back(mlp.weights[l].rows());
  return d;
}

void FullModelParams::validate() const {
  const Eigen::Index n = dim();
  require(n >= 1, ErrorKind::Configuration, "state dimension must be >= 1");
  require(init.a.size() == n && init.b.size() == n, ErrorKind::Configuration, "initial-state width mismatch");
  mlp.validate();
  require(mlp.input_width() == embed.dim() + 2 * n, ErrorKind::Configuration, "generator input width must be d + 2N");
  (void)interaction_rank(mlp, n);
  require(meas_raw.rows() == n && meas_raw.cols() >= n, ErrorKind::Configuration,
          "raw measurement must be N x V with V >= N");
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::Configuration, "dt must be positive");
}

FullModelParams init_full_model(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(seed);
  const Eigen::Index n = dims.n;
  FullModelParams m;
  m.dt = dims.dt;

  m.init.a.resize(n);
  m.init.b.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m.init.a(j) = rng.normal();
    m.init.b(j) = rng.normal();
  }

  m.h0.frequencies.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
    m.h0.frequencies(j) =
        n == 1 ? 0.0 : -std::numbers::pi / 2 + std::numbers::pi * static_cast<double>(j) / static_cast<double>(n - 1);

  m.embed.vectors.resize(dims.vocab_in, dims.d);
  for (Eigen::Index t = 0; t < dims.vocab_in; ++t)
    for (Eigen::Index c = 0; c < dims.d; ++c) m.embed.vectors(t, c) = rng.normal();

  std::vector<Eigen::Index> widths;
  widths.push_back(dims.d + 2 * n);
  if (dims.hidden.empty()) {
    widths.push_back(4 * n);
    widths.push_back(4 * n);
  } else {
    widths.insert(widths.end(), dims.hidden.begin(), dims.hidden.end());
  }
  widths.push_back(2 * n * dims.r + n);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index fan_in = widths[l];
    const Eigen::Index fan_out = widths[l + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (l + 2 == widths.size()) bound *= 0.01;
    RMatrix w(fan_out, fan_in);
    RVector b(fan_out);
    for (Eigen::Index i = 0; i < fan_out; ++i)
      for (Eigen::Index k = 0; k < fan_in; ++k) w(i, k) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < fan_out; ++i) b(i) = rng.uniform(-bound, bound);
    m.mlp.weights.push_back(std::move(w));
    m.mlp.biases.push_back(std::move(b));
  }

  m.meas_raw = sample_ginibre(n, dims.vocab_out, rng);
  return m;
}

namespace {

template <typename Visit>
void visit_parameters(FullModelParams& m, Visit&& visit) {
  for (Eigen::Index j = 0; j < m.init.a.size(); ++j) visit(m.init.a(j));
  for (Eigen::Index j = 0; j < m.init.b.size(); ++j) visit(m.init.b(j));
  for (Eigen::Index j = 0; j < m.h0.frequencies.size(); ++j) visit(m.h0.frequencies(j));
  for (Eigen::Index t = 0; t < m.embed.vectors.rows(); ++t)
    for (Eigen::Index c = 0; c < m.embed.vectors.cols(); ++c) visit(m.embed.vectors(t, c));
  for (std::size_t l = 0; l < m.mlp.layers(); ++l) {
    auto& w = m.mlp.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index k = 0; k < w.cols(); ++k) visit(w(i, k));
    auto& b = m.mlp.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) visit(b(i));
  }
  for (Eigen::Index i = 0; i < m.meas_raw.rows(); ++i)
    for (Eigen::Index k = 0; k < m.meas_raw.cols(); ++k) {
      auto* parts = reinterpret_cast<double*>(&m.meas_raw(i, k));
      visit(parts[0]);
      visit(parts[1]);
    }
}

}  // namespace

std::vector<double> pack(const FullModelParams& model) {
  std::vector<double> flat;
  flat.reserve(parameter_count(model));
  visit_parameters(const_cast<FullModelParams&>(model), [&](double& x) { flat.push_back(x); });
  return flat;
}

void unpack(std::span<const double> flat, FullModelParams& model) {
  require(flat.size() == parameter_count(model), ErrorKind::Shape, "flat parameter vector has the wrong length");
  std::size_t i = 0;
  visit_parameters(model, [&](double& x) { x = flat[i++]; });
}

std::size_t parameter_count(const FullModelParams& m) {
  std::size_t count = static_cast<std::size_t>(2 * m.init.a.size() + m.h0.frequencies.size() + m.embed.vectors.size() +
                                               2 * m.meas_raw.size());
  for (std::size_t l = 0; l < m.mlp.layers(); ++l)
    count += static_cast<std::size_t>(m.mlp.weights[l].size() + m.mlp.biases[l].size());
  return count;
}

FullModelParams zeros_like(const FullModelParams& model) {
  FullModelParams z;
  z.init.a = RVector::Zero(model.init.a.size());
  z.init.b = RVector::Zero(model.init.b.size());
  z.h0.frequencies = RVector::Zero(model.h0.frequencies.size());
  z.embed.vectors = RMatrix::Zero(model.embed.vectors.rows(), model.embed.vectors.cols());
  z.mlp = zeros_like(model.mlp);
  z.meas_raw = CMatrix::Zero(model.meas_raw.rows(), model.meas_raw.cols());
  z.dt = model.dt;
  return z;
}

}  // namespace qsm
