#include "qsm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qsm {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid dimension";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::DegenerateFactorization: return "degenerate factorization";
    case ErrorKind::DegenerateMeasurement: return "degenerate measurement";
    case ErrorKind::DegenerateInitialization: return "degenerate initialization";
    case ErrorKind::IllConditionedStep: return "ill-conditioned step";
    case ErrorKind::Vocabulary: return "vocabulary error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::InvariantViolation: return "invariant violation";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Complex Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

CMatrix sample_ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix g(rows, cols);
  // Column-major fill so the draw order is independent of Eigen's storage flags.
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = rng.complex_normal();
  return g;
}

CMatrix sample_haar_unitary(Eigen::Index dim, Rng& rng) {
  require(dim >= 1, ErrorKind::InvalidDimension, "unitary dimension must be >= 1");
  // A Ginibre matrix is full rank with probability one; redraw on the
  // floating-point coincidence that it is not.
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return thin_qr_unique(sample_ginibre(dim, dim, rng)).q;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateFactorization) throw;
    }
  }
  fail(ErrorKind::DegenerateFactorization, "could not draw a full-rank Ginibre matrix");
}

CMatrix sample_haar_unitary(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return sample_haar_unitary(dim, rng);
}

CVector sample_unit_vector(Eigen::Index dim, Rng& rng) {
  require(dim >= 1, ErrorKind::InvalidDimension, "vector dimension must be >= 1");
  CVector v = sample_ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

CMatrix sample_hermitian(Eigen::Index dim, Rng& rng, double scale) {
  const CMatrix g = sample_ginibre(dim, dim, rng);
  return (scale * 0.5) * (g + g.adjoint());
}

HermitianBasis::HermitianBasis(Eigen::Index dim) : dim_(dim) {
  require(dim >= 1, ErrorKind::InvalidDimension, "Hermitian basis dimension must be >= 1");
  const double s = 1.0 / std::numbers::sqrt2;
  elements_.reserve(static_cast<std::size_t>(dim * dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    CMatrix e = CMatrix::Zero(dim, dim);
    e(j, j) = 1.0;
    elements_.push_back(std::move(e));
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index k = j + 1; k < dim; ++k) {
      CMatrix e = CMatrix::Zero(dim, dim);
      e(j, k) = s;
      e(k, j) = s;
      elements_.push_back(std::move(e));
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index k = j + 1; k < dim; ++k) {
      CMatrix e = CMatrix::Zero(dim, dim);
      e(j, k) = Complex(0.0, -s);
      e(k, j) = Complex(0.0, s);
      elements_.push_back(std::move(e));
    }
  }
}

HermitianBasis hermitian_basis(Eigen::Index dim) { return HermitianBasis(dim); }

RVector vec_hermitian(const CMatrix& a, const HermitianBasis& basis, double hermitian_tol) {
  require(a.rows() == basis.dim() && a.cols() == basis.dim(), ErrorKind::Shape,
          "vec_hermitian: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              ", basis dimension is " + std::to_string(basis.dim()));
  require(hermiticity_defect(a) <= hermitian_tol, ErrorKind::Shape,
          "vec_hermitian: input is not Hermitian");
  RVector v(basis.size());
  for (Eigen::Index alpha = 0; alpha < basis.size(); ++alpha) {
    // tr(E A) = sum_{ab} E_ab A_ba
    v(alpha) = (basis[alpha].transpose().cwiseProduct(a)).sum().real();
  }
  return v;
}

CMatrix unvec_hermitian(const RVector& v, const HermitianBasis& basis) {
  require(v.size() == basis.size(), ErrorKind::Shape, "unvec_hermitian: coefficient count mismatch");
  CMatrix a = CMatrix::Zero(basis.dim(), basis.dim());
  for (Eigen::Index alpha = 0; alpha < basis.size(); ++alpha) a += v(alpha) * basis[alpha];
  return a;
}

namespace {

template <typename Matrix>
Eigen::Index rank_from_singular_values(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(a);
  const auto& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  if (!(sigma_max > 0.0)) return 0;
  const double threshold = rel_tol * sigma_max * static_cast<double>(std::max(a.rows(), a.cols()));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > threshold) ++rank;
  return rank;
}

}  // namespace

Eigen::Index numerical_rank(const CMatrix& a, double rel_tol) {
  require(rel_tol > 0.0 && rel_tol < 1.0, ErrorKind::Configuration, "rank tolerance must lie in (0, 1)");
  return rank_from_singular_values(a, rel_tol);
}

Eigen::Index numerical_rank(const RMatrix& a, double rel_tol) {
  require(rel_tol > 0.0 && rel_tol < 1.0, ErrorKind::Configuration, "rank tolerance must lie in (0, 1)");
  return rank_from_singular_values(a, rel_tol);
}

QrFactors thin_qr_unique(const CMatrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  require(n >= 1 && m >= n, ErrorKind::Shape,
          "thin_qr_unique: need rows >= cols >= 1, got " + std::to_string(m) + "x" + std::to_string(n));
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m, n);
  CMatrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(r(i, i)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mag = std::abs(r(i, i));
    if (!(mag > 1e-10 * max_diag) || max_diag == 0.0)
      fail(ErrorKind::DegenerateFactorization, "thin_qr_unique: input is rank deficient");
    const Complex phase = r(i, i) / mag;
    q.col(i) *= phase;
    r.row(i) *= std::conj(phase);
    r(i, i) = mag;
  }
  return {std::move(q), std::move(r)};
}

double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

double hermiticity_defect(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

void require_finite(const CMatrix& a, const char* what) {
  require(a.allFinite(), ErrorKind::InvariantViolation, std::string(what) + " has non-finite entries");
}

void require_finite(const RMatrix& a, const char* what) {
  require(a.allFinite(), ErrorKind::InvariantViolation, std::string(what) + " has non-finite entries");
}

}  // namespace qsm
