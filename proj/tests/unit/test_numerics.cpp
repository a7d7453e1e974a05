#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qsm;
using qsm::testutil::max_abs;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng(42).next_u64(), Rng(43).next_u64());
}

TEST(Rng, NormalMoments) {
  Rng rng(7);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Haar, IsUnitary) {
  Rng rng(1);
  for (Eigen::Index n : {1, 2, 5, 17}) EXPECT_LT(unitarity_defect(sample_haar_unitary(n, rng)), 1e-12);
}

TEST(Haar, FirstColumnPhaseIsUniform) {
  // Without the diagonal phase correction, U(0,0) would be biased towards
  // the positive real axis.
  Rng rng(3);
  double mean_re = 0.0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) mean_re += sample_haar_unitary(2, rng)(0, 0).real();
  EXPECT_NEAR(mean_re / trials, 0.0, 0.03);
}

TEST(HermitianBasis, OrthonormalUnderTraceProduct) {
  for (Eigen::Index n : {1, 2, 3, 4}) {
    const HermitianBasis basis(n);
    ASSERT_EQ(basis.size(), n * n);
    for (Eigen::Index a = 0; a < basis.size(); ++a) {
      EXPECT_LT(hermiticity_defect(basis[a]), 1e-15);
      for (Eigen::Index b = 0; b < basis.size(); ++b) {
        const Complex ip = (basis[a] * basis[b]).trace();
        EXPECT_NEAR(ip.real(), a == b ? 1.0 : 0.0, 1e-14);
        EXPECT_NEAR(ip.imag(), 0.0, 1e-14);
      }
    }
  }
}

TEST(HermitianBasis, VecUnvecRoundTrip) {
  Rng rng(5);
  const HermitianBasis basis(4);
  const CMatrix h = sample_hermitian(4, rng);
  EXPECT_LT(max_abs(unvec_hermitian(vec_hermitian(h, basis), basis) - h), 1e-13);
}

TEST(HermitianBasis, VecRejectsNonHermitian) {
  const HermitianBasis basis(2);
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(vec_hermitian(a, basis), Error);
}

TEST(NumericalRank, CountsIndependentRows) {
  RMatrix a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  EXPECT_EQ(numerical_rank(a), 2);
  EXPECT_EQ(numerical_rank(RMatrix(RMatrix::Identity(5, 5))), 5);
  EXPECT_EQ(numerical_rank(RMatrix(RMatrix::Zero(3, 4))), 0);
}

TEST(ThinQr, UniqueNormalization) {
  Rng rng(11);
  const CMatrix a = sample_ginibre(6, 3, rng);
  const QrFactors qr = thin_qr_unique(a);
  EXPECT_LT(max_abs(qr.q * qr.r - a), 1e-13);
  EXPECT_LT(max_abs(qr.q.adjoint() * qr.q - CMatrix::Identity(3, 3)), 1e-13);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_GT(qr.r(i, i).real(), 0.0);
    EXPECT_EQ(qr.r(i, i).imag(), 0.0);
    for (Eigen::Index j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), Complex(0.0));
  }
}

TEST(ThinQr, RejectsRankDeficient) {
  CMatrix a = CMatrix::Zero(4, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 2.0;
  EXPECT_THROW(thin_qr_unique(a), Error);
}

TEST(Finite, RejectsNan) {
  CMatrix a = CMatrix::Identity(2, 2);
  a(1, 0) = Complex(std::nan(""), 0.0);
  EXPECT_THROW(require_finite(a, "a"), Error);
}
