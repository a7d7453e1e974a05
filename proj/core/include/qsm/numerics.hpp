#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qsm/error.hpp"

namespace qsm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Reproducible random stream.
///
/// The engine is mt19937_64, whose output sequence is fixed by the standard.
/// Uniform and normal variates are derived here rather than through the
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed gives the same numbers with any conforming standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  /// Independent stream for worker `index` derived from (seed, index).
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal();

  /// Complex normal with E|z|^2 = 1.
  Complex complex_normal();

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// rows x cols matrix with iid complex standard-normal entries.
CMatrix sample_ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar-distributed unitary: QR of a Ginibre matrix with the positive-diagonal
/// correction.
CMatrix sample_haar_unitary(Eigen::Index dim, Rng& rng);
CMatrix sample_haar_unitary(Eigen::Index dim, std::uint64_t seed);

/// Uniformly random unit vector in C^dim.
CVector sample_unit_vector(Eigen::Index dim, Rng& rng);

/// Random Hermitian matrix with Gaussian entries (GUE-like, unnormalized).
CMatrix sample_hermitian(Eigen::Index dim, Rng& rng, double scale = 1.0);

/// Orthonormal basis of the real vector space of dim x dim Hermitian matrices
/// under <A, B> = tr(AB).
///
/// Order: the diagonal units E_jj, then (E_jk + E_kj)/sqrt2 for each j < k in
/// lexicographic order, then (-i E_jk + i E_kj)/sqrt2 for each j < k in the
/// same order.
class HermitianBasis {
 public:
  explicit HermitianBasis(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return dim_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(elements_.size()); }
  const CMatrix& operator[](Eigen::Index alpha) const { return elements_[static_cast<std::size_t>(alpha)]; }
  std::span<const CMatrix> elements() const noexcept { return elements_; }

 private:
  Eigen::Index dim_;
  std::vector<CMatrix> elements_;
};

HermitianBasis hermitian_basis(Eigen::Index dim);

/// [vec(A)]_alpha = tr(E_alpha A). Throws Shape if A is not Hermitian within
/// `hermitian_tol` (absolute, entrywise).
RVector vec_hermitian(const CMatrix& a, const HermitianBasis& basis, double hermitian_tol = 1e-10);

/// Inverse of vec_hermitian: sum_alpha v_alpha E_alpha.
CMatrix unvec_hermitian(const RVector& v, const HermitianBasis& basis);

/// Number of singular values above rel_tol * sigma_max * max(rows, cols).
Eigen::Index numerical_rank(const CMatrix& a, double rel_tol = kDefaultRankTolerance);
Eigen::Index numerical_rank(const RMatrix& a, double rel_tol = kDefaultRankTolerance);

struct QrFactors {
  CMatrix q;  // rows x cols, orthonormal columns
  CMatrix r;  // cols x cols, upper triangular, real positive diagonal
};

/// Thin QR with the unique normalization diag(R) > 0.
/// Requires rows >= cols and full column rank (|R_ii| > 1e-10 * max |R_jj|).
QrFactors thin_qr_unique(const CMatrix& a);

/// Max-abs entry of U^dagger U - I.
double unitarity_defect(const CMatrix& u);

/// Max-abs entry of A - A^dagger.
double hermiticity_defect(const CMatrix& a);

/// Throws if any entry is NaN or infinite.
void require_finite(const CMatrix& a, const char* what);
void require_finite(const RMatrix& a, const char* what);

}  // namespace qsm
