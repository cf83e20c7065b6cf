#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rscm/errors.hpp"

namespace rscm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x p data matrix, one observation per row.
using SampleSet = Eigen::MatrixXd;

/// Symmetric p x p matrix. The input is replaced by (A + A^T)/2 on
/// construction so the entries are exactly symmetric.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(const Matrix& entries);

  static CovarianceMatrix identity(Index p);
  static CovarianceMatrix diagonal(const Vector& d);

  Index dim() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }

  /// True only for matrices that went through a successful SPD factorization.
  bool spd_checked() const noexcept { return spd_checked_; }

  /// Copy with the SPD flag set; throws SingularityError when not positive definite.
  CovarianceMatrix checked() const;

 private:
  friend class SpdFactorization;

  Matrix entries_;
  bool spd_checked_ = false;
};

/// Cholesky factorization L L^T with a scale-relative pivot threshold:
/// a pivot below 1e-12 * max(diag) is reported as singular.
class SpdFactorization {
 public:
  static constexpr double kRelativePivotTolerance = 1e-12;

  explicit SpdFactorization(const CovarianceMatrix& m);

  const Matrix& lower() const noexcept { return lower_; }
  const CovarianceMatrix& matrix() const noexcept { return matrix_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  CovarianceMatrix inverse() const;
  double log_determinant() const;

 private:
  CovarianceMatrix matrix_;
  Matrix lower_;
};

/// The p^2 x p^2 commutation matrix K with K vec(A) = vec(A^T), stored as
/// an index permutation. vec() stacks columns (column-major).
class CommutationMatrix {
 public:
  explicit CommutationMatrix(Index p);

  Index dim() const noexcept { return p_; }
  /// Position that entry k of vec(A) moves to.
  Index image(Index k) const { return map_[static_cast<std::size_t>(k)]; }
  Vector apply(const Vector& v) const;
  Matrix dense() const;

 private:
  Index p_;
  std::vector<Index> map_;
};

Vector vec(const Matrix& a);
Matrix kronecker(const Matrix& a, const Matrix& b);

double trace(const Matrix& m);
double frobenius_norm_sq(const Matrix& m);

CovarianceMatrix spd_inverse(const CovarianceMatrix& m);

Vector column_means(const SampleSet& x);

/// H X with H = I - 11^T/n: subtracts each column's mean.
SampleSet centering_apply(const SampleSet& x);

/// Unbiased sample covariance, divisor n - 1. Requires n >= 2.
CovarianceMatrix sample_covariance(const SampleSet& x);

}  // namespace rscm
