#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qsm;

namespace {

MlpParams random_mlp(std::vector<Eigen::Index> widths, Rng& rng) {
  MlpParams mlp;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    RMatrix w(widths[l + 1], widths[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.5 * rng.normal();
    RVector b(widths[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.5 * rng.normal();
    mlp.weights.push_back(w);
    mlp.biases.push_back(b);
  }
  return mlp;
}

}  // namespace

TEST(InitialState, Normalizes) {
  InitialStateParams p{RVector::Constant(3, 1.0), RVector::Constant(3, 1.0)};
  const WaveState s = initial_state(p);
  EXPECT_NEAR(s.norm(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s[0] - Complex(1.0, 1.0) / std::sqrt(6.0)), 0.0, 1e-15);
  EXPECT_THROW(initial_state(InitialStateParams{RVector::Zero(2), RVector::Zero(2)}), Error);
}

TEST(Embedding, RowLookupAndVocabularyError) {
  EmbeddingTable e{RMatrix::Identity(3, 2)};
  EXPECT_EQ(e.row(1)(1), 1.0);
  try {
    e.row(3);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Vocabulary);
  }
  EXPECT_THROW(e.row(-1), Error);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(1);
  MlpParams mlp = random_mlp({3, 5, 4, 2}, rng);
  RVector x(3);
  x << 0.3, -0.2, 0.9;
  const RVector c = RVector::LinSpaced(2, 0.5, -1.5);
  auto loss = [&](const MlpParams& m, const RVector& in) { return c.dot(mlp_forward(m, in)); };

  MlpCache cache;
  mlp_forward(mlp, x, cache);
  MlpParams grad = zeros_like(mlp);
  const RVector gx = mlp_backward(mlp, cache, c, grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 3; ++i) {
    RVector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    EXPECT_TRUE(gradient_close(gx(i), (loss(mlp, xp) - loss(mlp, xm)) / (2 * h)));
  }
  for (std::size_t l = 0; l < mlp.layers(); ++l) {
    for (Eigen::Index k = 0; k < mlp.weights[l].size(); ++k) {
      MlpParams p = mlp, m = mlp;
      p.weights[l].data()[k] += h;
      m.weights[l].data()[k] -= h;
      EXPECT_TRUE(gradient_close(grad.weights[l].data()[k], (loss(p, x) - loss(m, x)) / (2 * h)));
    }
    for (Eigen::Index k = 0; k < mlp.biases[l].size(); ++k) {
      MlpParams p = mlp, m = mlp;
      p.biases[l](k) += h;
      m.biases[l](k) -= h;
      EXPECT_TRUE(gradient_close(grad.biases[l](k), (loss(p, x) - loss(m, x)) / (2 * h)));
    }
  }
}

TEST(Generator, OutputLayoutAndRank) {
  const Eigen::Index n = 3, r = 2;
  RVector out = RVector::LinSpaced(2 * n * r + n, 0.0, 2.0 * n * r + n - 1.0);
  const InteractionFactors f = factors_from_output(out, n, r);
  EXPECT_EQ(f.phi(1, 1), Complex(out(2 * (1 * n + 1)), out(2 * (1 * n + 1) + 1)));
  EXPECT_EQ(f.delta(2), out(2 * n * r + 2));

  // Adjoint layout: <out_grad, out> equals the real pairing of factor
  // gradients with factors.
  Rng rng(2);
  const CMatrix gphi = sample_ginibre(n, r, rng);
  const RVector gdelta = RVector::LinSpaced(n, -1.0, 1.0);
  const RVector packed = output_from_factor_gradients(gphi, gdelta);
  double pairing = gdelta.dot(f.delta);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index a = 0; a < r; ++a)
      pairing += gphi(j, a).real() * f.phi(j, a).real() + gphi(j, a).imag() * f.phi(j, a).imag();
  EXPECT_NEAR(packed.dot(out), pairing, 1e-12);

  MlpParams mlp;
  mlp.weights.push_back(RMatrix::Zero(2 * n * r + n, 4));
  mlp.biases.push_back(RVector::Zero(2 * n * r + n));
  EXPECT_EQ(interaction_rank(mlp, n), r);
  mlp.weights[0] = RMatrix::Zero(2 * n * r + n + 1, 4);
  mlp.biases[0] = RVector::Zero(2 * n * r + n + 1);
  EXPECT_THROW(interaction_rank(mlp, n), Error);
}

TEST(Generator, InputLayout) {
  RVector e(2);
  e << 7.0, 8.0;
  CVector c(2);
  c << Complex(0.6, 0.0), Complex(0.0, 0.8);
  const RVector in = interaction_input(e, WaveState::from_unit(c));
  ASSERT_EQ(in.size(), 6);
  EXPECT_EQ(in(0), 7.0);
  EXPECT_EQ(in(2), 0.6);
  EXPECT_EQ(in(3), 0.0);
  EXPECT_EQ(in(4), 0.0);
  EXPECT_EQ(in(5), 0.8);
}

TEST(FullModelInit, ShapesAndDeterminism) {
  ModelDims dims;
  dims.n = 4;
  dims.r = 2;
  dims.d = 3;
  dims.vocab_in = 5;
  dims.vocab_out = 7;
  const FullModelParams a = init_full_model(dims, 9), b = init_full_model(dims, 9);
  EXPECT_EQ(pack(a), pack(b));
  EXPECT_NE(pack(a), pack(init_full_model(dims, 10)));
  EXPECT_EQ(a.dim(), 4);
  EXPECT_EQ(a.rank(), 2);
  EXPECT_EQ(a.vocab_out(), 7);
  EXPECT_EQ(a.mlp.layers(), 3u);  // default: two hidden layers of width 4N
  EXPECT_EQ(a.mlp.weights[0].rows(), 16);
  EXPECT_NEAR(a.h0.frequencies(0), -std::acos(0.0), 1e-15);
  EXPECT_NEAR(a.h0.frequencies(3), std::acos(0.0), 1e-15);
  EXPECT_EQ(parameter_count(a), pack(a).size());
}

TEST(FullModelInit, PackUnpackRoundTrip) {
  ModelDims dims;
  dims.n = 3;
  dims.r = 1;
  dims.d = 2;
  dims.vocab_in = 4;
  dims.vocab_out = 5;
  dims.hidden = {6};
  const FullModelParams a = init_full_model(dims, 1);
  FullModelParams b = zeros_like(a);
  EXPECT_EQ(parameter_count(b), parameter_count(a));
  unpack(pack(a), b);
  EXPECT_EQ(pack(b), pack(a));
  const std::vector<double> wrong(pack(a).size() + 1, 0.0);
  EXPECT_THROW(unpack(wrong, b), Error);
}

TEST(FullModelInit, RejectsBadDims) {
  ModelDims dims;
  dims.n = 4;
  dims.vocab_out = 3;  // V < N
  EXPECT_THROW(init_full_model(dims, 0), Error);
  dims.vocab_out = 4;
  dims.r = 0;
  EXPECT_THROW(init_full_model(dims, 0), Error);
}
