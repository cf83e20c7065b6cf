#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rscm/matrixkit.hpp"
#include "rscm/shrinkage.hpp"

namespace rscm {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20180601;

/// Independent generator for (seed, a, b), e.g. (master seed, grid index, trial index).
Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct Gaussian {};
struct StudentT {
  double nu = 0.0;
};
using Family = std::variant<Gaussian, StudentT>;

/// Population elliptical kurtosis: 0 for Gaussian, 2/(nu - 4) for Student t.
double family_kappa(const Family& family);
std::string family_name(const Family& family);

/// Gaussian or Student-t population parameterized by its covariance matrix
/// (not its scatter matrix). Student t requires nu > 4.
class EllipticalModel {
 public:
  EllipticalModel(Family family, Vector mean, CovarianceMatrix covariance);

  const Family& family() const noexcept { return family_; }
  const Vector& mean() const noexcept { return mean_; }
  const CovarianceMatrix& covariance() const noexcept { return covariance_; }
  Index dim() const noexcept { return covariance_.dim(); }
  double kappa() const { return family_kappa(family_); }
  const Matrix& cholesky_lower() const noexcept { return lower_; }

 private:
  Family family_;
  Vector mean_;
  CovarianceMatrix covariance_;
  Matrix lower_;
};

/// (Sigma)_ij = rho^|i-j|, 0 < rho < 1.
CovarianceMatrix ar1_covariance(Index p, double rho);

/// Diagonal covariance from (eigenvalue, multiplicity) pairs.
CovarianceMatrix spiked_covariance(const std::vector<std::pair<double, Index>>& spectrum);

SampleSet sample(const EllipticalModel& model, Index n, Rng& rng);

/// i.i.d. N(0, 4) entries.
Vector random_mean(Index p, Rng& rng);

/// One grid point of an experiment.
struct Scenario {
  double grid_value = 0.0;
  CovarianceMatrix sigma;
  Family family = Gaussian{};
  Index n = 0;
};

struct ExperimentConfig {
  std::string grid_name = "n";
  std::vector<Scenario> grid;
  Index trials = 10000;
  std::uint64_t seed = kDefaultSeed;
  std::vector<Method> estimators{Method::Ell1, Method::Ell2, Method::Ell3, Method::LW};
  /// Draw the mean from random_mean per trial; otherwise the mean is zero.
  bool random_mean = true;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 1;
  /// Fraction of failed trials per estimator above which the run aborts.
  double failure_budget = 0.01;
};

struct EstimatorStats {
  double nmse = 0.0;
  double beta = 0.0;
  /// Monte-Carlo standard error of `nmse`.
  double se = 0.0;
  Index failed = 0;
};

struct GridRow {
  double grid_value = 0.0;
  std::vector<EstimatorStats> stats;  // parallel to ExperimentResult::estimators
  double oracle_nmse = 0.0;
  double oracle_beta = 0.0;
};

struct ExperimentResult {
  std::string grid_name;
  std::vector<Method> estimators;
  std::vector<GridRow> rows;

  const EstimatorStats& at(std::size_t row, Method m) const;

  /// Whitespace-delimited table: grid, <est>_nmse, <est>_beta, <est>_se, ..., oracle_nmse.
  /// Method::Oracle is labelled "oracle_mc".
  /// Six significant digits, or round-trip precision when `raw`.
  void write_table(std::ostream& out, bool raw = false) const;
};

/// Trial t of grid point g uses derive_stream(seed, g, t), so results do not
/// depend on the thread count.
ExperimentResult run_nmse_experiment(const ExperimentConfig& cfg);

}  // namespace rscm
