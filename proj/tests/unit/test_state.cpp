#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qsm;

TEST(WaveState, FromUnitChecksNorm) {
  CVector c(2);
  c << 1.0, 0.0;
  EXPECT_NO_THROW(WaveState::from_unit(c));
  c << 1.0, 1.0;
  EXPECT_THROW(WaveState::from_unit(c), Error);
}

TEST(WaveState, NormalizeZeroIsDegenerate) {
  try {
    WaveState::normalize(CVector::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInitialization);
  }
}

TEST(WaveState, OccupationsSumToOne) {
  Rng rng(2);
  const WaveState s = testutil::random_state(7, rng);
  EXPECT_NEAR(s.occupations().sum(), 1.0, 1e-14);
}

TEST(Pictures, RoundTripAndOccupations) {
  Rng rng(4);
  const WaveState s = testutil::random_state(5, rng);
  FreeHamiltonian h0{RVector::LinSpaced(5, -1.0, 2.0)};
  const WaveState ip = to_interaction(s, h0, 0.37);
  EXPECT_LT((to_schrodinger(ip, h0, 0.37).amplitudes() - s.amplitudes()).norm(), 1e-15);
  EXPECT_LT((ip.occupations() - s.occupations()).norm(), 1e-15);
}

TEST(Pictures, SchrodingerPhaseConvention) {
  FreeHamiltonian h0{RVector::Constant(1, 2.0)};
  const WaveState s = to_schrodinger(WaveState::basis(1, 0), h0, 0.5);
  EXPECT_NEAR(s[0].real(), std::cos(1.0), 1e-15);
  EXPECT_NEAR(s[0].imag(), -std::sin(1.0), 1e-15);
}

TEST(InteractionFactors, MaterializeIsHermitian) {
  Rng rng(8);
  const InteractionFactors f = testutil::random_factors(6, 2, rng);
  const CMatrix h = f.materialize();
  EXPECT_LT(hermiticity_defect(h), 1e-15);
  EXPECT_LT(testutil::max_abs(h - (f.phi * f.phi.adjoint() + CMatrix(f.delta.cast<Complex>().asDiagonal()))), 1e-14);
}

TEST(InteractionFactors, ValidateShapes) {
  InteractionFactors f;
  f.phi = CMatrix::Zero(3, 1);
  f.delta = RVector::Zero(2);
  EXPECT_THROW(f.validate(), Error);
}
