#include "rscm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rscm {

namespace {

Vector coordinate_median(const SampleSet& x) {
  const Index n = x.rows();
  Vector med(x.cols());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = x(i, j);
    const auto mid = column.begin() + n / 2;
    std::nth_element(column.begin(), mid, column.end());
    double value = *mid;
    if (n % 2 == 0) {
      value = 0.5 * (value + *std::max_element(column.begin(), mid));
    }
    med(j) = value;
  }
  return med;
}

double clamp_sphericity(double raw, Index p) {
  return std::min(static_cast<double>(p), std::max(1.0, raw));
}

// Optimality residual of the spatial median objective at mu, scaled by 1/n.
double point_residual(const SampleSet& x, const Vector& mu, double coincide) {
  Vector pull = Vector::Zero(x.cols());
  Index coincident = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector r = x.row(i).transpose() - mu;
    const double d = r.norm();
    if (d <= coincide) {
      ++coincident;
    } else {
      pull += r / d;
    }
  }
  return std::max(0.0, pull.norm() - static_cast<double>(coincident)) /
         static_cast<double>(x.rows());
}

// Newton step on sum_i |x_i - mu| from a point off the data. The Hessian
// c I - U^T diag(1/d) U is inverted through its n x n complement when p > n.
std::optional<Vector> newton_step(const SampleSet& x, const Vector& mu, double coincide) {
  const Index n = x.rows();
  const Index p = x.cols();
  Matrix u(n, p);
  Vector d(n);
  for (Index i = 0; i < n; ++i) {
    const Vector r = x.row(i).transpose() - mu;
    d(i) = r.norm();
    if (d(i) <= coincide) return std::nullopt;
    u.row(i) = r.transpose() / d(i);
  }
  const Vector pull = u.colwise().sum().transpose();
  const double c = d.cwiseInverse().sum();
  Vector step;
  if (p <= n) {
    const Matrix h = c * Matrix::Identity(p, p) - u.transpose() * d.cwiseInverse().asDiagonal() * u;
    step = h.ldlt().solve(pull);
  } else {
    Matrix m = -(u * u.transpose()) / c;
    m.diagonal() += d;
    step = pull / c + u.transpose() * m.partialPivLu().solve(u * pull) / (c * c);
  }
  if (!step.allFinite()) return std::nullopt;
  return Vector(mu + step);
}

Vector newton_polish(const SampleSet& x, Vector mu, double coincide) {
  double current = point_residual(x, mu, coincide);
  for (int k = 0; k < 4 && current > 0.0; ++k) {
    const std::optional<Vector> candidate = newton_step(x, mu, coincide);
    if (!candidate) break;
    const double next = point_residual(x, *candidate, coincide);
    if (!(next < current)) break;
    mu = *candidate;
    current = next;
  }
  return mu;
}

}  // namespace

PopulationParams PopulationParams::of(const CovarianceMatrix& sigma, double kappa) {
  return PopulationParams{trace(sigma.matrix()) / static_cast<double>(sigma.dim()),
                          true_sphericity(sigma), kappa};
}

void PopulationParams::validate(Index p) const {
  if (!(eta > 0.0)) throw ParameterError("scale eta must be positive");
  // small slack for sphericities computed in floating point
  const double slack = 1e-12 * static_cast<double>(p);
  if (gamma < 1.0 - slack || gamma > static_cast<double>(p) + slack) {
    throw ParameterError("sphericity gamma = " + std::to_string(gamma) + " outside [1, " +
                         std::to_string(p) + "]");
  }
  if (kappa < kappa_lower_bound(p)) {
    throw ParameterError("elliptical kurtosis kappa = " + std::to_string(kappa) +
                         " below -2/(p+2)");
  }
}

double estimate_scale(const CovarianceMatrix& s) {
  return trace(s.matrix()) / static_cast<double>(s.dim());
}

double true_sphericity(const CovarianceMatrix& sigma) {
  const double tr = trace(sigma.matrix());
  if (tr == 0.0) throw DegenerateError("sphericity undefined for a zero-trace matrix");
  // tr(Sigma^2) = ||Sigma||_F^2 for symmetric Sigma
  return static_cast<double>(sigma.dim()) * frobenius_norm_sq(sigma.matrix()) / (tr * tr);
}

double estimate_kurtosis(const SampleSet& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 4) {
    throw InsufficientSamplesError("kurtosis estimate needs n >= 4, got n = " + std::to_string(n));
  }
  const double nd = static_cast<double>(n);
  const double correction = (nd - 1.0) / ((nd - 2.0) * (nd - 3.0));
  double sum_k = 0.0;
  for (Index j = 0; j < p; ++j) {
    const auto col = x.col(j).array();
    const Eigen::ArrayXd d = col - col.mean();
    const Eigen::ArrayXd d2 = d.square();
    const double m2 = d2.mean();
    const double m4 = d2.square().mean();
    const double magnitude = col.abs().maxCoeff();
    if (!(m2 > std::numeric_limits<double>::min()) || std::sqrt(m2) <= 1e-12 * magnitude) {
      throw DegenerateError("column " + std::to_string(j) + " has zero sample variance", j);
    }
    const double k_hat = m4 / (m2 * m2) - 3.0;
    sum_k += correction * ((nd + 1.0) * k_hat + 6.0);
  }
  return std::max(kappa_lower_bound(p), sum_k / (3.0 * static_cast<double>(p)));
}

Vector spatial_median(const SampleSet& x, const SpatialMedianOptions& options) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 1) throw InsufficientSamplesError("spatial median needs at least one sample");

  Vector mu = coordinate_median(x);
  const double scale = (x.rowwise() - mu.transpose()).rowwise().norm().mean();
  if (!(scale > 0.0)) return mu;  // all samples identical
  const double coincide = 1e-12 * scale;
  const double nd = static_cast<double>(n);

  Vector pull(p);
  Vector weighted(p);
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    pull.setZero();
    weighted.setZero();
    double weight_sum = 0.0;
    Index coincident = 0;
    Index nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const Vector r = x.row(i).transpose() - mu;
      const double d = r.norm();
      if (d <= coincide) {
        ++coincident;
        continue;
      }
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = i;
      }
      pull += r / d;
      weighted += x.row(i).transpose() / d;
      weight_sum += 1.0 / d;
    }
    const double pull_norm = pull.norm();
    // At a data point of multiplicity k the optimality condition is |pull| <= k.
    residual = std::max(0.0, pull_norm - static_cast<double>(coincident)) / nd;
    if (residual <= options.tolerance || weight_sum == 0.0) {
      return coincident > 0 ? mu : newton_polish(x, mu, coincide);
    }
    // Weiszfeld crawls when the minimizer is a data point; test the closest one directly.
    if (coincident == 0 && nearest_dist < 1e-3 * scale) {
      const Vector candidate = x.row(nearest).transpose();
      if (point_residual(x, candidate, coincide) <= options.tolerance) return candidate;
    }

    // Weiszfeld is only linear; near an interior optimum take Newton steps that shrink the residual.
    if (coincident == 0 && (iter >= 20 || residual < 1e-3)) {
      const std::optional<Vector> candidate = newton_step(x, mu, coincide);
      if (candidate && point_residual(x, *candidate, coincide) < residual) {
        mu = *candidate;
        continue;
      }
    }

    const Vector weiszfeld = weighted / weight_sum;
    Vector next = weiszfeld;
    if (coincident > 0) {
      // Vardi-Zhang step: blend the Weiszfeld point with the current data point.
      const double ratio = static_cast<double>(coincident) / pull_norm;
      next = (1.0 - ratio) * weiszfeld + ratio * mu;
    }
    const double step = (next - mu).norm();
    mu = next;
    if (step <= 1e-15 * scale) return mu;  // floating-point fixed point
  }
  throw ConvergenceError("spatial median did not converge in " +
                             std::to_string(options.max_iterations) + " iterations",
                         mu, residual);
}

SignCovariance sign_covariance(const SampleSet& x, const Vector& center) {
  if (x.rows() < 1) throw InsufficientSamplesError("sign covariance needs at least one sample");
  if (center.size() != x.cols()) throw DimensionError("center length must equal column count");
  const SampleSet r = x.rowwise() - center.transpose();
  const Vector norms = r.rowwise().norm();
  const double threshold = 1e-12 * norms.mean();

  Matrix acc = Matrix::Zero(x.cols(), x.cols());
  Index used = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    if (!(norms(i) > threshold)) continue;
    const Vector v = r.row(i).transpose() / norms(i);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(v);
    ++used;
  }
  if (used == 0) throw DegenerateError("every sample coincides with the center");
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  return SignCovariance{acc / static_cast<double>(used), used};
}

SphericityEstimate sphericity_ell1(const SampleSet& x) {
  if (x.rows() < 2) {
    throw InsufficientSamplesError("Ell1 sphericity needs n >= 2, got n = " +
                                   std::to_string(x.rows()));
  }
  const Index p = x.cols();
  const Vector center = spatial_median(x);
  const SampleSet r = x.rowwise() - center.transpose();
  const Vector norms = r.rowwise().norm();
  const double threshold = 1e-12 * norms.mean();

  std::vector<Index> keep;
  for (Index i = 0; i < x.rows(); ++i) {
    if (norms(i) > threshold) keep.push_back(i);
  }
  const Index m = static_cast<Index>(keep.size());
  if (m < 2) {
    throw DegenerateError("Ell1 sphericity needs two samples away from the spatial median");
  }
  Matrix v(m, p);
  for (Index k = 0; k < m; ++k) {
    const Index i = keep[static_cast<std::size_t>(k)];
    v.row(k) = r.row(i) / norms(i);
  }
  // tr(S_sgn^2) = ||V^T V||_F^2 / m^2 = ||V V^T||_F^2 / m^2
  const double gram_sq = m < p ? (v * v.transpose()).squaredNorm()
                               : (v.transpose() * v).squaredNorm();
  const double md = static_cast<double>(m);
  const double pd = static_cast<double>(p);
  const double tr_sgn_sq = gram_sq / (md * md);
  const double raw = md / (md - 1.0) * (pd * tr_sgn_sq - pd / md);
  return SphericityEstimate{raw, clamp_sphericity(raw, p), m};
}

ThetaCoefficients theta_coefficients(Index n, double kappa) {
  if (n <= 2) {
    throw InsufficientSamplesError("theta coefficients need n >= 3, got n = " + std::to_string(n));
  }
  const double nd = static_cast<double>(n);
  const double den_a = nd + kappa;
  const double den_b = (nd - 2.0) * (3.0 * kappa * (nd - 1.0) + nd * (nd + 1.0));
  if (std::abs(den_a) < 1e-12 || std::abs(den_b) < 1e-12) {
    throw ParameterError("theta coefficients are singular at n = " + std::to_string(n) +
                         ", kappa = " + std::to_string(kappa));
  }
  ThetaCoefficients c;
  c.n = n;
  c.kappa = kappa;
  c.a_n = (nd / den_a) * (nd / (nd - 1.0) + kappa);
  c.b_n = (kappa + nd) * (nd - 1.0) * (nd - 1.0) / den_b;
  return c;
}

double estimate_theta(const CovarianceMatrix& s, Index n, double kappa) {
  const ThetaCoefficients c = theta_coefficients(n, kappa);
  const double p = static_cast<double>(s.dim());
  const double mean_eig = trace(s.matrix()) / p;
  return c.b_n * (frobenius_norm_sq(s.matrix()) / p - c.a_n * (p / static_cast<double>(n)) *
                                                          mean_eig * mean_eig);
}

SphericityEstimate sphericity_ell2(const CovarianceMatrix& s, Index n, double kappa_hat) {
  const double tr = trace(s.matrix());
  if (!(tr > 0.0)) throw DegenerateError("Ell2 sphericity needs tr(S) > 0");
  const ThetaCoefficients c = theta_coefficients(n, kappa_hat);
  const Index p = s.dim();
  const double pd = static_cast<double>(p);
  const double ratio = pd * frobenius_norm_sq(s.matrix()) / (tr * tr);
  const double raw = c.b_n * (ratio - c.a_n * pd / static_cast<double>(n));
  return SphericityEstimate{raw, clamp_sphericity(raw, p), n};
}

}  // namespace rscm
