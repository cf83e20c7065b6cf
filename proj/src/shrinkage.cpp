#include "rscm/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rscm {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Oracle: return "oracle";
    case Method::Ell1: return "ell1";
    case Method::Ell2: return "ell2";
    case Method::Ell3: return "ell3";
    case Method::Gau: return "gau";
    case Method::LW: return "lw";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Oracle, Method::Ell1, Method::Ell2, Method::Ell3, Method::Gau,
                   Method::LW}) {
    if (name == to_string(m)) return m;
  }
  throw ParameterError("unknown estimator '" + std::string(name) + "'");
}

OracleBeta oracle_beta_general(double gamma, double nmse_scm) {
  if (gamma < 1.0 - 1e-9) throw ParameterError("sphericity must be >= 1");
  if (nmse_scm < 0.0) throw ParameterError("NMSE must be non-negative");
  const double num = std::max(0.0, gamma - 1.0);
  const double den = num + gamma * nmse_scm;
  if (den == 0.0) return {0.0, false};  // gamma == 1 and NMSE == 0: limit by continuity
  const double beta = num / den;
  if (beta >= kMaxBeta) return {kMaxBeta, true};
  return {beta, false};
}

double oracle_beta_elliptical(double gamma, double kappa, Index p, Index n, MeanMode mode) {
  if (gamma < 1.0 - 1e-9 || gamma > static_cast<double>(p) * (1.0 + 1e-9)) {
    throw ParameterError("sphericity " + std::to_string(gamma) + " outside [1, p]");
  }
  if (kappa < kappa_lower_bound(p)) throw ParameterError("kappa below -2/(p+2)");
  if (n < 2) throw InsufficientSamplesError("oracle beta needs n >= 2");
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double num = std::max(0.0, gamma - 1.0);
  if (num == 0.0) return 0.0;
  const double scm_divisor = mode == MeanMode::Estimated ? nd - 1.0 : nd;
  return num / (num + kappa * (2.0 * gamma + pd) / nd + (gamma + pd) / scm_divisor);
}

double oracle_mse_at_optimum(const CovarianceMatrix& sigma, double beta_o) {
  if (beta_o < 0.0 || beta_o >= 1.0) throw ParameterError("beta_o must lie in [0, 1)");
  const double eta = trace(sigma.matrix()) / static_cast<double>(sigma.dim());
  Matrix diff = sigma.matrix();
  diff.diagonal().array() -= eta;
  return (1.0 - beta_o) * frobenius_norm_sq(diff);
}

MomentReport scm_moments(const CovarianceMatrix& sigma, double kappa, Index n) {
  if (n < 2) throw InsufficientSamplesError("SCM moments need n >= 2");
  const Index p = sigma.dim();
  if (kappa < kappa_lower_bound(p)) throw ParameterError("kappa below -2/(p+2)");
  const double nd = static_cast<double>(n);
  const double tr1 = trace(sigma.matrix());
  const double tr2 = frobenius_norm_sq(sigma.matrix());
  const double tau1 = 1.0 / (nd - 1.0) + kappa / nd;
  const double gamma = true_sphericity(sigma);

  MomentReport r;
  r.mse_scm = tau1 * tr1 * tr1 + (1.0 / (nd - 1.0) + 2.0 * kappa / nd) * tr2;
  r.nmse_scm = (1.0 + static_cast<double>(p) / gamma) * tau1 + kappa / nd;
  r.e_tr_s2 = r.mse_scm + tr2;
  r.e_tr_s_sq = (1.0 + kappa / nd) * tr1 * tr1 + 2.0 * tau1 * tr2;
  return r;
}

VarVecDecomposition VarVecDecomposition::make(const CovarianceMatrix& sigma, double kappa,
                                              Index n) {
  if (n < 2) throw InsufficientSamplesError("var(vec(S)) needs n >= 2");
  const double nd = static_cast<double>(n);
  return VarVecDecomposition{1.0 / (nd - 1.0) + kappa / nd, kappa / nd, sigma, n};
}

Matrix VarVecDecomposition::assemble() const {
  const Matrix kron = kronecker(sigma.matrix(), sigma.matrix());
  const CommutationMatrix k(sigma.dim());
  Matrix out = kron;
  // (I + K) M: row r of M is added to row K(r)
  for (Index r = 0; r < kron.rows(); ++r) out.row(k.image(r)) += kron.row(r);
  out *= tau1;
  const Vector v = vec(sigma.matrix());
  out.noalias() += tau2 * v * v.transpose();
  // the rank-one update may round differently across the diagonal
  return 0.5 * (out + out.transpose());
}

Matrix var_vec_scm(const CovarianceMatrix& sigma, double kappa, Index n, Index cap) {
  if (sigma.dim() > cap) {
    throw SizeCapError("var(vec(S)) is dense p^4; p = " + std::to_string(sigma.dim()) +
                       " exceeds cap " + std::to_string(cap));
  }
  return VarVecDecomposition::make(sigma, kappa, n).assemble();
}

CovarianceMatrix assemble_rscm(const CovarianceMatrix& s, double alpha, double beta) {
  if (alpha < 0.0) throw ParameterError("alpha must be non-negative");
  if (beta < 0.0 || beta > 1.0) throw ParameterError("beta must lie in [0, 1]");
  if (alpha == 0.0 && beta == 0.0) throw ParameterError("alpha and beta are both zero");
  Matrix out = beta * s.matrix();
  out.diagonal().array() += alpha;
  return CovarianceMatrix(out);
}

CovarianceMatrix assemble_rscm(const CovarianceMatrix& s, const ShrinkageCoefficients& coeffs) {
  return assemble_rscm(s, coeffs.alpha, coeffs.beta);
}

ShrinkageCoefficients oracle_coefficients(const CovarianceMatrix& sigma, double kappa, Index n) {
  const PopulationParams params = PopulationParams::of(sigma, kappa);
  ShrinkageCoefficients c;
  c.method = Method::Oracle;
  c.beta = oracle_beta_elliptical(params.gamma, kappa, sigma.dim(), n);
  c.alpha = (1.0 - c.beta) * params.eta;
  c.diagnostics = {params.eta, kappa, params.gamma, params.gamma, n};
  return c;
}

ShrinkageFitter::ShrinkageFitter(const SampleSet& x)
    : x_(x), scm_(sample_covariance(x)), eta_(estimate_scale(scm_)) {}

double ShrinkageFitter::kappa() {
  if (!kappa_) kappa_ = estimate_kurtosis(x_);
  return *kappa_;
}

const SphericityEstimate& ShrinkageFitter::gamma_ell1() {
  if (!ell1_) ell1_ = sphericity_ell1(x_);
  return *ell1_;
}

const SphericityEstimate& ShrinkageFitter::gamma_ell2() {
  if (!ell2_) ell2_ = sphericity_ell2(scm_, n(), kappa());
  return *ell2_;
}

ShrinkageCoefficients ShrinkageFitter::from_sphericity(Method method, const SphericityEstimate& g,
                                                       double kappa) {
  ShrinkageCoefficients c;
  c.method = method;
  c.beta = oracle_beta_elliptical(g.value, kappa, p(), n());
  c.alpha = (1.0 - c.beta) * eta_;
  c.diagnostics = {eta_, kappa, g.raw, g.value, g.n_used};
  return c;
}

ShrinkageCoefficients ShrinkageFitter::fit_lw() const {
  const SampleSet centered = centering_apply(x_);
  const Matrix& s = scm_.matrix();
  const double nd = static_cast<double>(n());
  const double pd = static_cast<double>(p());

  Matrix target_gap = s;
  target_gap.diagonal().array() -= eta_;
  const double d2 = frobenius_norm_sq(target_gap);

  // sum_i ||x_i x_i^T - S||_F^2 = sum_i (|x_i|^4 - 2 x_i^T S x_i + ||S||_F^2)
  const Vector sq_norms = centered.rowwise().squaredNorm();
  const double quad = (centered * s).cwiseProduct(centered).sum();
  const double spread = sq_norms.squaredNorm() - 2.0 * quad + nd * frobenius_norm_sq(s);
  const double b2 = std::max(0.0, spread) / (nd * nd);

  ShrinkageCoefficients c;
  c.method = Method::LW;
  c.beta = d2 < 1e-14 * pd ? 0.0 : 1.0 - std::min(b2, d2) / d2;
  c.alpha = (1.0 - c.beta) * eta_;
  c.diagnostics.eta = eta_;
  c.diagnostics.n_used = n();
  return c;
}

ShrinkageCoefficients ShrinkageFitter::fit(Method method) {
  switch (method) {
    case Method::Ell1: return from_sphericity(Method::Ell1, gamma_ell1(), kappa());
    case Method::Ell2: return from_sphericity(Method::Ell2, gamma_ell2(), kappa());
    case Method::Ell3: {
      const bool use_ell1 = gamma_ell1().value < gamma_ell2().value;
      ShrinkageCoefficients c = use_ell1 ? fit(Method::Ell1) : fit(Method::Ell2);
      c.branch = c.method;
      c.method = Method::Ell3;
      return c;
    }
    case Method::Gau: {
      // Gaussian presumption: kappa = 0 in both the sphericity and beta.
      return from_sphericity(Method::Gau, sphericity_ell2(scm_, n(), 0.0), 0.0);
    }
    case Method::LW: return fit_lw();
    case Method::Oracle: break;
  }
  throw ParameterError("the oracle rule needs population parameters; use oracle_coefficients");
}

ShrinkageCoefficients fit_ell1(const SampleSet& x) { return ShrinkageFitter(x).fit(Method::Ell1); }
ShrinkageCoefficients fit_ell2(const SampleSet& x) { return ShrinkageFitter(x).fit(Method::Ell2); }
ShrinkageCoefficients fit_ell3(const SampleSet& x) { return ShrinkageFitter(x).fit(Method::Ell3); }
ShrinkageCoefficients fit_gau(const SampleSet& x) { return ShrinkageFitter(x).fit(Method::Gau); }
ShrinkageCoefficients fit_lw(const SampleSet& x) { return ShrinkageFitter(x).fit(Method::LW); }
ShrinkageCoefficients fit(const SampleSet& x, Method method) {
  return ShrinkageFitter(x).fit(method);
}

}  // namespace rscm
