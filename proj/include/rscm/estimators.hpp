#pragma once

#include "rscm/matrixkit.hpp"

namespace rscm {

/// Lower bound of the elliptical kurtosis parameter in dimension p.
inline double kappa_lower_bound(Index p) { return -2.0 / (static_cast<double>(p) + 2.0); }

/// Scale eta = tr(Sigma)/p, sphericity gamma = p tr(Sigma^2)/tr(Sigma)^2 and
/// elliptical kurtosis kappa (one third of the marginal excess kurtosis).
struct PopulationParams {
  double eta = 1.0;
  double gamma = 1.0;
  double kappa = 0.0;

  static PopulationParams of(const CovarianceMatrix& sigma, double kappa);

  /// Throws ParameterError unless eta > 0, 1 <= gamma <= p, kappa >= -2/(p+2).
  void validate(Index p) const;
};

struct SignCovariance {
  Matrix matrix;
  /// Samples that were not coincident with the center.
  Index n_used = 0;
};

/// Coefficients making b_n (tr(S^2)/p - a_n (p/n) (tr(S)/p)^2) unbiased for tr(Sigma^2)/p.
struct ThetaCoefficients {
  double a_n = 0.0;
  double b_n = 0.0;
  Index n = 0;
  double kappa = 0.0;
};

/// Sphericity estimate before (`raw`) and after clamping to [1, p].
struct SphericityEstimate {
  double raw = 0.0;
  double value = 0.0;
  Index n_used = 0;
};

double estimate_scale(const CovarianceMatrix& s);

double true_sphericity(const CovarianceMatrix& sigma);

/// Average bias-corrected marginal kurtosis divided by three, floored at -2/(p+2).
/// Needs n >= 4 and non-constant columns.
double estimate_kurtosis(const SampleSet& x);

struct SpatialMedianOptions {
  int max_iterations = 1000;
  /// Bound on |sum of unit residuals| / n at the returned point.
  double tolerance = 1e-8;
};

/// Minimizer of sum_i |x_i - mu| by Weiszfeld iteration from the
/// coordinate-wise median, with the Vardi-Zhang treatment of iterates that
/// land on a data point. Converged interior points get a few Newton steps.
Vector spatial_median(const SampleSet& x, const SpatialMedianOptions& options = {});

/// Average of outer products of unit-normalized residuals x_i - center.
/// Residuals shorter than 1e-12 times the average residual norm are skipped.
SignCovariance sign_covariance(const SampleSet& x, const Vector& center);

SphericityEstimate sphericity_ell1(const SampleSet& x);

ThetaCoefficients theta_coefficients(Index n, double kappa);

double estimate_theta(const CovarianceMatrix& s, Index n, double kappa);

SphericityEstimate sphericity_ell2(const CovarianceMatrix& s, Index n, double kappa_hat);

}  // namespace rscm
