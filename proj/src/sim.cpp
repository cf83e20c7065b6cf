#include "rscm/sim.hpp"

#include "rscm/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>

namespace rscm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TrialOutcome {
  std::vector<double> nmse;
  std::vector<double> beta;
  std::vector<char> ok;
};

}  // namespace

Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

double family_kappa(const Family& family) {
  if (const auto* t = std::get_if<StudentT>(&family)) return 2.0 / (t->nu - 4.0);
  return 0.0;
}

std::string family_name(const Family& family) {
  if (const auto* t = std::get_if<StudentT>(&family)) return "t" + format_number(t->nu, false);
  return "gaussian";
}

EllipticalModel::EllipticalModel(Family family, Vector mean, CovarianceMatrix covariance)
    : family_(family), mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (const auto* t = std::get_if<StudentT>(&family_); t && !(t->nu > 4.0)) {
    throw ParameterError("Student t needs nu > 4 for finite fourth moments, got nu = " +
                         std::to_string(t->nu));
  }
  if (mean_.size() != covariance_.dim()) throw DimensionError("mean length must equal dim");
  const SpdFactorization chol(covariance_);
  lower_ = chol.lower();
  covariance_ = chol.matrix();
}

CovarianceMatrix ar1_covariance(Index p, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("AR(1) needs 0 < rho < 1");
  if (p < 1) throw ParameterError("dimension must be positive");
  Matrix m(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) m(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return CovarianceMatrix(m);
}

CovarianceMatrix spiked_covariance(const std::vector<std::pair<double, Index>>& spectrum) {
  Index p = 0;
  for (const auto& [value, count] : spectrum) {
    if (!(value > 0.0)) throw ParameterError("spiked spectrum needs positive eigenvalues");
    if (count < 0) throw ParameterError("multiplicity must be non-negative");
    p += count;
  }
  if (p < 1) throw ParameterError("spiked spectrum has zero total multiplicity");
  Vector d(p);
  Index at = 0;
  for (const auto& [value, count] : spectrum) {
    d.segment(at, count).setConstant(value);
    at += count;
  }
  return CovarianceMatrix::diagonal(d);
}

SampleSet sample(const EllipticalModel& model, Index n, Rng& rng) {
  if (n < 1) throw ParameterError("sample size must be positive");
  const Index p = model.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(i, j) = normal(rng);
  }
  if (const auto* t = std::get_if<StudentT>(&model.family())) {
    // z sqrt(nu / w) has covariance nu/(nu-2) I; rescale so it is I.
    std::chi_squared_distribution<double> chi2(t->nu);
    for (Index i = 0; i < n; ++i) z.row(i) *= std::sqrt((t->nu - 2.0) / chi2(rng));
  }
  SampleSet x = z * model.cholesky_lower().transpose();
  x.rowwise() += model.mean().transpose();
  return x;
}

Vector random_mean(Index p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 2.0);
  Vector mu(p);
  for (Index i = 0; i < p; ++i) mu(i) = normal(rng);
  return mu;
}

const EstimatorStats& ExperimentResult::at(std::size_t row, Method m) const {
  const auto it = std::find(estimators.begin(), estimators.end(), m);
  if (it == estimators.end()) throw ParameterError("estimator not part of this result");
  return rows.at(row).stats[static_cast<std::size_t>(it - estimators.begin())];
}

void ExperimentResult::write_table(std::ostream& out, bool raw) const {
  out << "grid";
  for (Method m : estimators) {
    // The Monte-Carlo oracle-parameter rule; "oracle_nmse" is the closed form.
    const std::string name = m == Method::Oracle ? "oracle_mc" : std::string(to_string(m));
    out << ' ' << name << "_nmse " << name << "_beta " << name << "_se";
  }
  out << " oracle_nmse\n";
  for (const GridRow& row : rows) {
    out << format_number(row.grid_value, raw);
    for (const EstimatorStats& s : row.stats) {
      out << ' ' << format_number(s.nmse, raw) << ' ' << format_number(s.beta, raw) << ' '
          << format_number(s.se, raw);
    }
    out << ' ' << format_number(row.oracle_nmse, raw) << '\n';
  }
}

ExperimentResult run_nmse_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ParameterError("trials must be >= 1");
  if (cfg.grid.empty()) throw ParameterError("experiment grid is empty");
  if (cfg.estimators.empty()) throw ParameterError("no estimators configured");

  const std::size_t n_est = cfg.estimators.size();
  const auto trials = static_cast<std::size_t>(cfg.trials);
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                      : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));

  ExperimentResult result;
  result.grid_name = cfg.grid_name;
  result.estimators = cfg.estimators;

  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    const Scenario& sc = cfg.grid[g];
    const Index p = sc.sigma.dim();
    const double kappa = family_kappa(sc.family);
    const EllipticalModel base(sc.family, Vector::Zero(p), sc.sigma);
    const ShrinkageCoefficients oracle = oracle_coefficients(sc.sigma, kappa, sc.n);
    const double sigma_norm_sq = frobenius_norm_sq(sc.sigma.matrix());

    GridRow row;
    row.grid_value = sc.grid_value;
    row.oracle_beta = oracle.beta;
    row.oracle_nmse = oracle_mse_at_optimum(sc.sigma, oracle.beta) / sigma_norm_sq;

    std::vector<TrialOutcome> outcomes(trials);
    auto run_trial = [&](std::size_t t) {
      TrialOutcome& out = outcomes[t];
      out.nmse.assign(n_est, 0.0);
      out.beta.assign(n_est, 0.0);
      out.ok.assign(n_est, 0);
      Rng rng = derive_stream(cfg.seed, g, t);
      Vector mu = Vector::Zero(p);
      if (cfg.random_mean) mu = random_mean(p, rng);
      SampleSet x = sample(base, sc.n, rng);
      x.rowwise() += mu.transpose();
      try {
        ShrinkageFitter fitter(x);
        for (std::size_t e = 0; e < n_est; ++e) {
          try {
            const Method m = cfg.estimators[e];
            const ShrinkageCoefficients c = m == Method::Oracle ? oracle : fitter.fit(m);
            Matrix err = c.beta * fitter.scm().matrix() - sc.sigma.matrix();
            err.diagonal().array() += c.alpha;
            out.nmse[e] = frobenius_norm_sq(err) / sigma_norm_sq;
            out.beta[e] = c.beta;
            out.ok[e] = 1;
          } catch (const Error&) {
          }
        }
      } catch (const Error&) {
      }
    };

    if (threads <= 1) {
      for (std::size_t t = 0; t < trials; ++t) run_trial(t);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t t = w; t < trials; t += threads) run_trial(t);
        });
      }
      for (auto& th : pool) th.join();
    }

    // Serial reduction in trial order keeps the output independent of threading.
    for (std::size_t e = 0; e < n_est; ++e) {
      double sum = 0.0;
      double sum_beta = 0.0;
      std::size_t count = 0;
      for (const TrialOutcome& o : outcomes) {
        if (!o.ok[e]) continue;
        sum += o.nmse[e];
        sum_beta += o.beta[e];
        ++count;
      }
      EstimatorStats s;
      s.failed = static_cast<Index>(trials - count);
      if (static_cast<double>(s.failed) > cfg.failure_budget * static_cast<double>(trials)) {
        throw ExperimentError(std::string(to_string(cfg.estimators[e])) + " failed in " +
                              std::to_string(s.failed) + " of " + std::to_string(trials) +
                              " trials at grid value " + format_number(sc.grid_value, false));
      }
      if (count == 0) throw ExperimentError("no successful trials");
      const double cd = static_cast<double>(count);
      s.nmse = sum / cd;
      s.beta = sum_beta / cd;
      double ss = 0.0;
      for (const TrialOutcome& o : outcomes) {
        if (o.ok[e]) ss += (o.nmse[e] - s.nmse) * (o.nmse[e] - s.nmse);
      }
      s.se = count > 1 ? std::sqrt(ss / (cd - 1.0) / cd) : 0.0;
      row.stats.push_back(s);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace rscm
