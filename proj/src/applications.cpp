#include "rscm/applications.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace rscm {

LabeledDataset::LabeledDataset(SampleSet samples, std::vector<int> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
  if (static_cast<Index>(labels_.size()) != samples_.rows()) {
    throw DimensionError("label count " + std::to_string(labels_.size()) +
                         " does not match sample count " + std::to_string(samples_.rows()));
  }
  if (labels_.empty()) throw InsufficientSamplesError("labeled dataset is empty");
  const int max_label = *std::max_element(labels_.begin(), labels_.end());
  const int min_label = *std::min_element(labels_.begin(), labels_.end());
  if (min_label < 1) throw ParameterError("class labels must be >= 1");
  num_classes_ = max_label;
  counts_.assign(static_cast<std::size_t>(num_classes_), 0);
  for (int l : labels_) ++counts_[static_cast<std::size_t>(l - 1)];
  for (int k = 0; k < num_classes_; ++k) {
    if (counts_[static_cast<std::size_t>(k)] == 0) {
      throw ParameterError("class " + std::to_string(k + 1) + " has no samples");
    }
  }
}

SampleSet LabeledDataset::class_samples(int label) const {
  if (label < 1 || label > num_classes_) throw ParameterError("no such class label");
  SampleSet out(counts_[static_cast<std::size_t>(label - 1)], dim());
  Index r = 0;
  for (Index i = 0; i < size(); ++i) {
    if (labels_[static_cast<std::size_t>(i)] == label) out.row(r++) = samples_.row(i);
  }
  return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<Index>& rows) const {
  SampleSet x(static_cast<Index>(rows.size()), dim());
  std::vector<int> l(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    x.row(static_cast<Index>(k)) = samples_.row(rows[k]);
    l[k] = labels_[static_cast<std::size_t>(rows[k])];
  }
  return LabeledDataset(std::move(x), std::move(l));
}

CovarianceMatrix pooled_scm(const LabeledDataset& data) {
  const Index n = data.size();
  const int k_classes = data.num_classes();
  if (n <= k_classes) throw InsufficientSamplesError("pooled SCM needs n > K");
  Matrix acc = Matrix::Zero(data.dim(), data.dim());
  for (int k = 1; k <= k_classes; ++k) {
    const Index nk = data.class_counts()[static_cast<std::size_t>(k - 1)];
    if (nk < 2) {
      throw InsufficientSamplesError("class " + std::to_string(k) + " has " + std::to_string(nk) +
                                     " sample(s); pooled SCM needs n_k >= 2");
    }
    acc += static_cast<double>(nk - 1) * sample_covariance(data.class_samples(k)).matrix();
  }
  return CovarianceMatrix(acc / static_cast<double>(n - k_classes));
}

namespace {

ClassModel make_class(int label, Vector mean, const CovarianceMatrix& cov) {
  const SpdFactorization chol(cov);
  return ClassModel{label, std::move(mean), chol.matrix(), chol.inverse(), chol.log_determinant()};
}

}  // namespace

DiscriminantModel train_rda(const LabeledDataset& data, DiscriminantMode mode,
                            std::optional<Method> estimator) {
  if (estimator == Method::Oracle) throw ParameterError("oracle shrinkage is not available for RDA");
  DiscriminantModel model;
  model.mode = mode;
  model.estimator = estimator;
  const int k_classes = data.num_classes();
  const Index p = data.dim();

  std::vector<SampleSet> per_class;
  std::vector<Vector> means;
  for (int k = 1; k <= k_classes; ++k) {
    per_class.push_back(data.class_samples(k));
    means.push_back(column_means(per_class.back()));
  }

  if (mode == DiscriminantMode::LDA) {
    CovarianceMatrix shared = pooled_scm(data);
    if (estimator) {
      SampleSet centered(data.size(), p);
      for (Index i = 0; i < data.size(); ++i) {
        const auto k = static_cast<std::size_t>(data.labels()[static_cast<std::size_t>(i)] - 1);
        centered.row(i) = data.samples().row(i) - means[k].transpose();
      }
      ShrinkageCoefficients c = fit(centered, *estimator);
      // re-anchor alpha on the pooled SCM's scale
      c.diagnostics.eta = estimate_scale(shared);
      c.alpha = (1.0 - c.beta) * c.diagnostics.eta;
      shared = assemble_rscm(shared, c);
      model.coefficients.push_back(c);
    }
    const SpdFactorization chol(shared);
    const CovarianceMatrix inverse = chol.inverse();
    const double log_det = chol.log_determinant();
    for (int k = 1; k <= k_classes; ++k) {
      model.classes.push_back(
          ClassModel{k, means[static_cast<std::size_t>(k - 1)], chol.matrix(), inverse, log_det});
    }
    return model;
  }

  for (int k = 1; k <= k_classes; ++k) {
    const SampleSet& xk = per_class[static_cast<std::size_t>(k - 1)];
    CovarianceMatrix cov = sample_covariance(xk);
    if (estimator) {
      const ShrinkageCoefficients c = fit(xk, *estimator);
      cov = assemble_rscm(cov, c);
      model.coefficients.push_back(c);
    }
    model.classes.push_back(make_class(k, means[static_cast<std::size_t>(k - 1)], cov));
  }
  return model;
}

std::vector<double> discriminant_scores(const DiscriminantModel& model, const Vector& x) {
  std::vector<double> scores;
  scores.reserve(model.classes.size());
  for (const ClassModel& c : model.classes) {
    if (x.size() != c.mean.size()) throw DimensionError("observation has wrong dimension");
    const Vector d = x - c.mean;
    scores.push_back(d.dot(c.inverse.matrix() * d) + c.log_det);
  }
  return scores;
}

int classify(const DiscriminantModel& model, const Vector& x) {
  const std::vector<double> scores = discriminant_scores(model, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] < scores[best]) best = k;
  }
  return model.classes[best].label;
}

double misclassification_rate(const DiscriminantModel& model, const LabeledDataset& test) {
  Index wrong = 0;
  for (Index i = 0; i < test.size(); ++i) {
    if (classify(model, test.samples().row(i).transpose()) !=
        test.labels()[static_cast<std::size_t>(i)]) {
      ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

Vector gmvp_weights(const CovarianceMatrix& sigma_hat) {
  const SpdFactorization chol(sigma_hat);
  const Vector raw = chol.solve(Vector(Vector::Ones(sigma_hat.dim())));
  return raw / raw.sum();
}

BacktestReport run_backtest(const BacktestConfig& cfg) {
  const Index t_total = cfg.returns.rows();
  const Index p = cfg.returns.cols();
  if (cfg.hold < 1) throw ParameterError("holding period must be >= 1");
  if (cfg.window < 2) throw ParameterError("training window must be >= 2");
  if (cfg.window + cfg.hold > t_total) {
    throw ParameterError("window + hold = " + std::to_string(cfg.window + cfg.hold) +
                         " exceeds the " + std::to_string(t_total) + " available days");
  }
  if (t_total - cfg.window < 2) throw ParameterError("need at least two out-of-sample days");
  if (cfg.estimator == Method::Oracle) throw ParameterError("oracle shrinkage needs the true covariance");

  BacktestReport report;
  report.portfolio_returns.resize(t_total - cfg.window);
  double beta_sum = 0.0;
  std::size_t window_index = 0;
  for (Index t = cfg.window; t < t_total; t += cfg.hold, ++window_index) {
    Vector w = Vector::Ones(p);
    if (p > 1) {
      try {
        const SampleSet train = cfg.returns.middleRows(t - cfg.window, cfg.window);
        CovarianceMatrix cov = sample_covariance(train);
        double beta = 1.0;
        if (cfg.estimator) {
          const ShrinkageCoefficients c = fit(train, *cfg.estimator);
          cov = assemble_rscm(cov, c);
          beta = c.beta;
        }
        w = gmvp_weights(cov);
        beta_sum += beta;
      } catch (const Error& e) {
        throw BacktestError(window_index, "rebalance " + std::to_string(window_index) +
                                              " (days " + std::to_string(t - cfg.window) + "-" +
                                              std::to_string(t - 1) + "): " + e.what());
      }
    }
    const Index days = std::min(cfg.hold, t_total - t);
    report.portfolio_returns.segment(t - cfg.window, days) = cfg.returns.middleRows(t, days) * w;
    ++report.rebalances;
  }

  const Vector& r = report.portfolio_returns;
  const double mean = r.mean();
  const double var = (r.array() - mean).square().sum() / static_cast<double>(r.size() - 1);
  report.realized_risk = cfg.annualization * std::sqrt(var);
  report.mean_beta = p > 1 ? beta_sum / static_cast<double>(report.rebalances)
                           : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace rscm
