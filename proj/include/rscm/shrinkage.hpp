#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "rscm/estimators.hpp"
#include "rscm/matrixkit.hpp"

namespace rscm {

/// Which rule produced a (alpha, beta) pair.
enum class Method { Oracle, Ell1, Ell2, Ell3, Gau, LW };

std::string_view to_string(Method m);
/// Accepts the lower-case names ("oracle", "ell1", ..., "lw").
Method parse_method(std::string_view name);

struct ShrinkageDiagnostics {
  double eta = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double gamma_raw = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  Index n_used = 0;
};

/// Regularized SCM weights for beta * S + alpha * I.
struct ShrinkageCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  Method method = Method::Oracle;
  /// For Ell3: the rule whose sphericity estimate was selected.
  std::optional<Method> branch;
  ShrinkageDiagnostics diagnostics;
};

struct OracleBeta {
  double value = 0.0;
  /// Set when the formula gave 1 (S == Sigma limit) and the value was clamped below 1.
  bool limit_clamped = false;
};

/// Largest beta returned by the general oracle.
inline constexpr double kMaxBeta = 1.0 - 1e-12;

/// (gamma - 1) / ((gamma - 1) + gamma * NMSE(S)); 0 when gamma == 1 and NMSE == 0.
OracleBeta oracle_beta_general(double gamma, double nmse_scm);

/// Whether the location is estimated (SCM with n - 1 divisor) or known.
enum class MeanMode { Estimated, Known };

/// Optimal beta for elliptical sampling. With MeanMode::Known the
/// (gamma + p)/(n - 1) term becomes (gamma + p)/n.
double oracle_beta_elliptical(double gamma, double kappa, Index p, Index n,
                              MeanMode mode = MeanMode::Estimated);

/// (1 - beta_o) ||Sigma - eta I||_F^2.
double oracle_mse_at_optimum(const CovarianceMatrix& sigma, double beta_o);

/// Closed-form second moments of the SCM under elliptical sampling.
struct MomentReport {
  double mse_scm = 0.0;
  double nmse_scm = 0.0;
  double e_tr_s2 = 0.0;
  double e_tr_s_sq = 0.0;
};

MomentReport scm_moments(const CovarianceMatrix& sigma, double kappa, Index n);

/// var(vec(S)) = tau1 (I + K)(Sigma (x) Sigma) + tau2 vec(Sigma) vec(Sigma)^T.
struct VarVecDecomposition {
  double tau1 = 0.0;
  double tau2 = 0.0;
  CovarianceMatrix sigma;
  Index n = 0;

  static VarVecDecomposition make(const CovarianceMatrix& sigma, double kappa, Index n);
  Matrix assemble() const;
};

inline constexpr Index kDefaultVarVecCap = 8;

/// Dense p^2 x p^2 covariance of vec(S). Test oracle; p is capped.
Matrix var_vec_scm(const CovarianceMatrix& sigma, double kappa, Index n,
                   Index cap = kDefaultVarVecCap);

/// beta S + alpha I. Throws ParameterError for alpha == beta == 0 or out-of-range weights.
CovarianceMatrix assemble_rscm(const CovarianceMatrix& s, double alpha, double beta);
CovarianceMatrix assemble_rscm(const CovarianceMatrix& s, const ShrinkageCoefficients& coeffs);

/// Oracle coefficients from the true covariance and kurtosis.
ShrinkageCoefficients oracle_coefficients(const CovarianceMatrix& sigma, double kappa, Index n);

/// Computes plug-in shrinkage coefficients for one data set. Shared
/// sub-estimates (S, eta, kappa, both sphericities) are computed once and
/// reused across methods. Not safe for concurrent use of one instance.
class ShrinkageFitter {
 public:
  explicit ShrinkageFitter(const SampleSet& x);
  explicit ShrinkageFitter(SampleSet&&) = delete;  // keeps a reference to x

  Index n() const noexcept { return x_.rows(); }
  Index p() const noexcept { return x_.cols(); }
  const CovarianceMatrix& scm() const noexcept { return scm_; }
  double eta() const noexcept { return eta_; }

  double kappa();
  const SphericityEstimate& gamma_ell1();
  const SphericityEstimate& gamma_ell2();

  /// Method::Oracle is rejected: it needs population quantities.
  ShrinkageCoefficients fit(Method method);

 private:
  ShrinkageCoefficients from_sphericity(Method method, const SphericityEstimate& g, double kappa);
  ShrinkageCoefficients fit_lw() const;

  const SampleSet& x_;
  CovarianceMatrix scm_;
  double eta_;
  std::optional<double> kappa_;
  std::optional<SphericityEstimate> ell1_;
  std::optional<SphericityEstimate> ell2_;
};

ShrinkageCoefficients fit_ell1(const SampleSet& x);
ShrinkageCoefficients fit_ell2(const SampleSet& x);
ShrinkageCoefficients fit_ell3(const SampleSet& x);
ShrinkageCoefficients fit_gau(const SampleSet& x);
ShrinkageCoefficients fit_lw(const SampleSet& x);
ShrinkageCoefficients fit(const SampleSet& x, Method method);

}  // namespace rscm
