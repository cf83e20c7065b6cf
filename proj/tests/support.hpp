#pragma once

#include <random>

#include "rscm/matrixkit.hpp"
#include "rscm/sim.hpp"

namespace rscm::test {

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  }
  return m;
}

/// A A^T / p + I: well conditioned, dense.
inline CovarianceMatrix random_spd(Index p, Rng& rng) {
  const Matrix a = gaussian_matrix(p, p, rng);
  return CovarianceMatrix(a * a.transpose() / static_cast<double>(p) + Matrix::Identity(p, p));
}

inline Matrix random_orthogonal(Index p, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(p, p, rng));
  return qr.householderQ() * Matrix::Identity(p, p);
}

}  // namespace rscm::test
