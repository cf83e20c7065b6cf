#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "rscm/matrixkit.hpp"
#include "rscm/shrinkage.hpp"

namespace rscm {

/// Samples with integer class labels 1..K. Every label in 1..K must occur.
class LabeledDataset {
 public:
  LabeledDataset(SampleSet samples, std::vector<int> labels);

  const SampleSet& samples() const noexcept { return samples_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  Index size() const noexcept { return samples_.rows(); }
  Index dim() const noexcept { return samples_.cols(); }
  int num_classes() const noexcept { return num_classes_; }
  /// n_k for k = 1..K (index k - 1).
  const std::vector<Index>& class_counts() const noexcept { return counts_; }

  SampleSet class_samples(int label) const;
  LabeledDataset subset(const std::vector<Index>& rows) const;

 private:
  SampleSet samples_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::vector<Index> counts_;
};

/// sum_k (n_k - 1)/(n - K) S_k. Every class needs n_k >= 2.
CovarianceMatrix pooled_scm(const LabeledDataset& data);

enum class DiscriminantMode { LDA, QDA };

struct ClassModel {
  int label = 0;
  Vector mean;
  CovarianceMatrix covariance;
  CovarianceMatrix inverse;
  double log_det = 0.0;
};

struct DiscriminantModel {
  DiscriminantMode mode = DiscriminantMode::LDA;
  /// nullopt means the plain (pooled) SCM was used.
  std::optional<Method> estimator;
  std::vector<ClassModel> classes;  // ordered by label
  std::vector<ShrinkageCoefficients> coefficients;  // one for LDA, K for QDA
};

/// Estimates class means and the (regularized) covariance(s). For LDA with an
/// estimator, (alpha, beta) are fitted on the class-centered pooled data and
/// applied to the pooled SCM.
DiscriminantModel train_rda(const LabeledDataset& data, DiscriminantMode mode,
                            std::optional<Method> estimator);

/// (x - m_k)^T Sigma_k^{-1} (x - m_k) + log|Sigma_k| for each class, by label.
std::vector<double> discriminant_scores(const DiscriminantModel& model, const Vector& x);

/// Label with the smallest score; ties go to the smallest label.
int classify(const DiscriminantModel& model, const Vector& x);

double misclassification_rate(const DiscriminantModel& model, const LabeledDataset& test);

/// Sigma^{-1} 1 / (1^T Sigma^{-1} 1).
Vector gmvp_weights(const CovarianceMatrix& sigma_hat);

struct BacktestConfig {
  /// T x p daily net returns.
  Matrix returns;
  Index window = 0;
  Index hold = 20;
  /// nullopt selects the plain SCM.
  std::optional<Method> estimator;
  double annualization = std::sqrt(250.0);
};

struct BacktestReport {
  double realized_risk = 0.0;
  /// Average beta over rebalances; NaN when no covariance was estimated (p == 1).
  double mean_beta = 0.0;
  Vector portfolio_returns;
  Index rebalances = 0;
};

/// Rolling GMVP: at day t (starting at `window`, stepping by `hold`) the
/// covariance is estimated from days [t - window, t) and the weights are
/// held for days [t, t + hold). The last holding period may be partial.
BacktestReport run_backtest(const BacktestConfig& cfg);

}  // namespace rscm
