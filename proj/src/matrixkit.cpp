#include "rscm/matrixkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rscm {

CovarianceMatrix::CovarianceMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw DimensionError("covariance matrix must be square, got " +
                         std::to_string(entries.rows()) + "x" + std::to_string(entries.cols()));
  }
  if (entries.rows() == 0) {
    throw DimensionError("covariance matrix must have positive dimension");
  }
  entries_ = 0.5 * (entries + entries.transpose());
}

CovarianceMatrix CovarianceMatrix::identity(Index p) {
  return CovarianceMatrix(Matrix::Identity(p, p));
}

CovarianceMatrix CovarianceMatrix::diagonal(const Vector& d) {
  return CovarianceMatrix(Matrix(d.asDiagonal()));
}

CovarianceMatrix CovarianceMatrix::checked() const { return SpdFactorization(*this).matrix(); }

SpdFactorization::SpdFactorization(const CovarianceMatrix& m) : matrix_(m) {
  const Index p = m.dim();
  const Matrix& a = m.matrix();
  const double max_diag = a.diagonal().maxCoeff();
  const double threshold = kRelativePivotTolerance * std::max(max_diag, 0.0);

  lower_ = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    const double pivot = a(j, j) - lower_.row(j).head(j).squaredNorm();
    if (!(pivot > threshold) || max_diag <= 0.0) {
      throw SingularityError(j, "matrix is not positive definite: pivot " + std::to_string(j) +
                                    " is " + std::to_string(pivot));
    }
    const double ljj = std::sqrt(pivot);
    lower_(j, j) = ljj;
    const Index rest = p - j - 1;
    if (rest > 0) {
      lower_.col(j).tail(rest) =
          (a.col(j).tail(rest) - lower_.bottomLeftCorner(rest, j) * lower_.row(j).head(j).transpose()) /
          ljj;
    }
  }
  matrix_.spd_checked_ = true;
}

Vector SpdFactorization::solve(const Vector& b) const {
  if (b.size() != lower_.rows()) throw DimensionError("right-hand side has wrong length");
  const auto l = lower_.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

Matrix SpdFactorization::solve(const Matrix& b) const {
  if (b.rows() != lower_.rows()) throw DimensionError("right-hand side has wrong row count");
  const auto l = lower_.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

CovarianceMatrix SpdFactorization::inverse() const {
  CovarianceMatrix inv(solve(Matrix(Matrix::Identity(lower_.rows(), lower_.rows()))));
  // Inverse of an SPD matrix is SPD.
  inv.spd_checked_ = true;
  return inv;
}

double SpdFactorization::log_determinant() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

CommutationMatrix::CommutationMatrix(Index p) : p_(p) {
  if (p < 1) throw DimensionError("commutation matrix needs p >= 1");
  map_.resize(static_cast<std::size_t>(p * p));
  // entry (i, j) sits at i + j p in vec(A) and at j + i p in vec(A^T)
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      map_[static_cast<std::size_t>(i + j * p)] = j + i * p;
    }
  }
}

Vector CommutationMatrix::apply(const Vector& v) const {
  if (v.size() != p_ * p_) throw DimensionError("vector length must be p^2");
  Vector out(v.size());
  for (Index k = 0; k < v.size(); ++k) out(image(k)) = v(k);
  return out;
}

Matrix CommutationMatrix::dense() const {
  Matrix k = Matrix::Zero(p_ * p_, p_ * p_);
  for (Index c = 0; c < p_ * p_; ++c) k(image(c), c) = 1.0;
  return k;
}

Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double trace(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("trace of non-square " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " matrix");
  }
  return m.trace();
}

double frobenius_norm_sq(const Matrix& m) { return m.squaredNorm(); }

CovarianceMatrix spd_inverse(const CovarianceMatrix& m) { return SpdFactorization(m).inverse(); }

Vector column_means(const SampleSet& x) {
  if (x.rows() < 1) throw InsufficientSamplesError("need at least one observation");
  return x.colwise().mean().transpose();
}

SampleSet centering_apply(const SampleSet& x) {
  return x.rowwise() - column_means(x).transpose();
}

CovarianceMatrix sample_covariance(const SampleSet& x) {
  if (x.rows() < 2) {
    throw InsufficientSamplesError("sample covariance needs n >= 2, got n = " +
                                   std::to_string(x.rows()));
  }
  const SampleSet centered = centering_apply(x);
  Matrix s = Matrix::Zero(x.cols(), x.cols());
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return CovarianceMatrix(s / static_cast<double>(x.rows() - 1));
}

}  // namespace rscm
