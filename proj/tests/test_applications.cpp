#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rscm/applications.hpp"
#include "support.hpp"

using namespace rscm;

namespace {

LabeledDataset gaussian_classes(const std::vector<Vector>& means, Index per_class, double spread, Rng& rng) {
  const Index p = means.front().size();
  SampleSet x(per_class * static_cast<Index>(means.size()), p);
  std::vector<int> labels;
  for (std::size_t k = 0; k < means.size(); ++k) {
    const Matrix z = spread * test::gaussian_matrix(per_class, p, rng);
    for (Index i = 0; i < per_class; ++i) {
      x.row(static_cast<Index>(k) * per_class + i) = z.row(i) + means[k].transpose();
      labels.push_back(static_cast<int>(k) + 1);
    }
  }
  return LabeledDataset(x, labels);
}

/// Pseudo-inverse QDA: Moore-Penrose inverse and log pseudo-determinant.
int pinv_qda_classify(const std::vector<Vector>& means, const std::vector<Matrix>& covs, const Vector& x) {
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < means.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(covs[k]);
    const double tol = 1e-10 * es.eigenvalues().maxCoeff();
    Matrix pinv = Matrix::Zero(covs[k].rows(), covs[k].cols());
    double logdet = 0.0;
    for (Index j = 0; j < es.eigenvalues().size(); ++j) {
      const double l = es.eigenvalues()(j);
      if (l > tol) {
        pinv += es.eigenvectors().col(j) * es.eigenvectors().col(j).transpose() / l;
        logdet += std::log(l);
      }
    }
    const Vector d = x - means[k];
    const double score = d.dot(pinv * d) + logdet;
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(k) + 1;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("LabeledDataset validation") {
  CHECK_THROWS_AS(LabeledDataset(Matrix::Zero(3, 2), {1, 2}), DimensionError);
  CHECK_THROWS_AS(LabeledDataset(Matrix::Zero(3, 2), {1, 3, 3}), ParameterError);
  CHECK_THROWS_AS(LabeledDataset(Matrix::Zero(2, 2), {0, 1}), ParameterError);
  const LabeledDataset d(Matrix::Zero(4, 2), {2, 1, 2, 2});
  CHECK(d.num_classes() == 2);
  CHECK(d.class_counts() == std::vector<Index>{1, 3});
  CHECK(d.class_samples(2).rows() == 3);
  CHECK(d.subset({1, 2}).num_classes() == 2);
}

TEST_CASE("pooled_scm") {
  Rng rng(1);
  SUBCASE("one class is the SCM") {
    const Matrix x = test::gaussian_matrix(9, 3, rng);
    const LabeledDataset d(x, std::vector<int>(9, 1));
    CHECK((pooled_scm(d).matrix() - sample_covariance(x).matrix()).norm() < 1e-14);
  }
  SUBCASE("identical class scatter") {
    const Matrix x = test::gaussian_matrix(6, 3, rng);
    Matrix both(12, 3);
    both.topRows(6) = x;
    both.bottomRows(6) = x.rowwise() + Vector::Constant(3, 5.0).transpose();
    std::vector<int> labels(12, 1);
    std::fill(labels.begin() + 6, labels.end(), 2);
    CHECK((pooled_scm(LabeledDataset(both, labels)).matrix() - sample_covariance(x).matrix()).norm() < 1e-12);
  }
  SUBCASE("weighted sum oracle") {
    const Matrix x = test::gaussian_matrix(20, 4, rng);
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(1 + (i * 7) % 3);
    const LabeledDataset d(x, labels);
    Matrix oracle = Matrix::Zero(4, 4);
    double weight_sum = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const double nk = static_cast<double>(d.class_counts()[static_cast<std::size_t>(k - 1)]);
      const Matrix xk = d.class_samples(k);
      const Vector m = xk.colwise().mean();
      Matrix sk = Matrix::Zero(4, 4);
      for (Index i = 0; i < xk.rows(); ++i) {
        const Vector r = xk.row(i).transpose() - m;
        sk += r * r.transpose();
      }
      sk /= nk - 1.0;
      oracle += (nk - 1.0) / 17.0 * sk;
      weight_sum += (nk - 1.0) / 17.0;
    }
    CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((pooled_scm(d).matrix() - oracle).norm() < 1e-12);
  }
  SUBCASE("class with one sample") {
    CHECK_THROWS_AS(pooled_scm(LabeledDataset(Matrix::Random(5, 2), {1, 1, 1, 1, 2})), InsufficientSamplesError);
  }
}

TEST_CASE("train_rda") {
  Rng rng(2);
  std::vector<Vector> means{Vector::Zero(6), Vector::Constant(6, 1.0), Vector::LinSpaced(6, -1.0, 1.0)};
  const LabeledDataset data = gaussian_classes(means, 12, 1.0, rng);

  SUBCASE("plain LDA shares the pooled SCM") {
    const DiscriminantModel m = train_rda(data, DiscriminantMode::LDA, std::nullopt);
    REQUIRE(m.classes.size() == 3);
    CHECK(m.coefficients.empty());
    const Matrix pooled = pooled_scm(data).matrix();
    for (const ClassModel& c : m.classes) {
      CHECK((c.covariance.matrix() - pooled).norm() < 1e-14);
      CHECK((c.covariance.matrix() * c.inverse.matrix() - Matrix::Identity(6, 6)).norm() < 1e-10);
      CHECK((c.mean - data.class_samples(c.label).colwise().mean().transpose()).norm() < 1e-14);
    }
  }
  SUBCASE("regularized LDA applies the fitted weights to the pooled SCM") {
    const DiscriminantModel m = train_rda(data, DiscriminantMode::LDA, Method::Ell2);
    REQUIRE(m.coefficients.size() == 1);
    const ShrinkageCoefficients& c = m.coefficients.front();
    const CovarianceMatrix pooled = pooled_scm(data);
    CHECK(c.alpha == doctest::Approx((1.0 - c.beta) * estimate_scale(pooled)));
    CHECK((m.classes[0].covariance.matrix() - assemble_rscm(pooled, c).matrix()).norm() < 1e-12);
  }
  SUBCASE("QDA with p > n_k needs regularization") {
    const LabeledDataset wide = gaussian_classes({Vector::Zero(15), Vector::Ones(15)}, 6, 1.0, rng);
    CHECK_THROWS_AS(train_rda(wide, DiscriminantMode::QDA, std::nullopt), SingularityError);
    const DiscriminantModel m = train_rda(wide, DiscriminantMode::QDA, Method::Ell1);
    for (const ClassModel& c : m.classes) {
      CHECK(c.covariance.spd_checked());
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(c.covariance.matrix()).eigenvalues().minCoeff() > 0.0);
    }
    CHECK(m.coefficients.size() == 2);
  }
  SUBCASE("oracle is rejected") {
    CHECK_THROWS_AS(train_rda(data, DiscriminantMode::LDA, Method::Oracle), ParameterError);
  }
}

TEST_CASE("regularized QDA beats pseudo-inverse QDA") {
  const Index p = 20;
  const Index nk = 10;
  Vector shift = Vector::Zero(p);
  shift.head(5).setConstant(1.5);
  const EllipticalModel c1(Gaussian{}, Vector::Zero(p), ar1_covariance(p, 0.5));
  const EllipticalModel c2(Gaussian{}, shift, ar1_covariance(p, 0.5));
  double rda_correct = 0.0;
  double pinv_correct = 0.0;
  for (int split = 0; split < 200; ++split) {
    Rng rng = derive_stream(3, static_cast<std::uint64_t>(split));
    Matrix x(2 * nk, p);
    x.topRows(nk) = sample(c1, nk, rng);
    x.bottomRows(nk) = sample(c2, nk, rng);
    std::vector<int> labels(2 * nk, 1);
    std::fill(labels.begin() + nk, labels.end(), 2);
    const LabeledDataset train(x, labels);
    const DiscriminantModel m = train_rda(train, DiscriminantMode::QDA, Method::Ell1);

    std::vector<Vector> means;
    std::vector<Matrix> covs;
    for (int k = 1; k <= 2; ++k) {
      means.push_back(train.class_samples(k).colwise().mean().transpose());
      covs.push_back(sample_covariance(train.class_samples(k)).matrix());
    }
    Matrix tx(100, p);
    tx.topRows(50) = sample(c1, 50, rng);
    tx.bottomRows(50) = sample(c2, 50, rng);
    for (Index i = 0; i < 100; ++i) {
      const int truth = i < 50 ? 1 : 2;
      const Vector v = tx.row(i).transpose();
      rda_correct += classify(m, v) == truth;
      pinv_correct += pinv_qda_classify(means, covs, v) == truth;
    }
  }
  CHECK(rda_correct >= pinv_correct);
}

TEST_CASE("classify") {
  Rng rng(4);
  SUBCASE("sample at a class mean with spherical covariance") {
    DiscriminantModel m;
    for (int k = 1; k <= 3; ++k) {
      m.classes.push_back(ClassModel{k, Vector::Constant(2, k), CovarianceMatrix::identity(2),
                                     CovarianceMatrix::identity(2), 0.0});
    }
    CHECK(classify(m, Vector::Constant(2, 2.0)) == 2);
    CHECK(classify(m, Vector::Constant(2, 2.9)) == 3);
  }
  SUBCASE("identity covariance is nearest mean") {
    DiscriminantModel m;
    std::vector<Vector> centers;
    for (int k = 1; k <= 4; ++k) {
      centers.push_back(test::gaussian_matrix(3, 1, rng));
      m.classes.push_back(ClassModel{k, centers.back(), CovarianceMatrix::identity(3), CovarianceMatrix::identity(3), 0.0});
    }
    for (int t = 0; t < 200; ++t) {
      const Vector x = 2.0 * test::gaussian_matrix(3, 1, rng);
      int nearest = 1;
      for (int k = 2; k <= 4; ++k) {
        if ((x - centers[static_cast<std::size_t>(k - 1)]).norm() < (x - centers[static_cast<std::size_t>(nearest - 1)]).norm()) nearest = k;
      }
      CHECK(classify(m, x) == nearest);
    }
  }
  SUBCASE("ties go to the smallest label") {
    DiscriminantModel m;
    m.classes.push_back(ClassModel{1, Vector::Constant(1, -1.0), CovarianceMatrix::identity(1), CovarianceMatrix::identity(1), 0.0});
    m.classes.push_back(ClassModel{2, Vector::Constant(1, 1.0), CovarianceMatrix::identity(1), CovarianceMatrix::identity(1), 0.0});
    CHECK(classify(m, Vector::Zero(1)) == 1);
  }
  SUBCASE("direct rule oracle on a 2-class QDA model") {
    const LabeledDataset d = gaussian_classes({Vector::Zero(3), Vector::Constant(3, 0.8)}, 15, 1.0, rng);
    const DiscriminantModel m = train_rda(d, DiscriminantMode::QDA, Method::Ell2);
    for (int t = 0; t < 1000; ++t) {
      const Vector x = 1.5 * test::gaussian_matrix(3, 1, rng);
      double best = std::numeric_limits<double>::infinity();
      int label = 0;
      for (const ClassModel& c : m.classes) {
        const Vector diff = x - c.mean;
        const Vector sol = c.covariance.matrix().ldlt().solve(diff);
        const double score = diff.dot(sol) + std::log(c.covariance.matrix().determinant());
        if (score < best) {
          best = score;
          label = c.label;
        }
      }
      CHECK(classify(m, x) == label);
    }
  }
  SUBCASE("decisions are invariant under a rigid motion of the data") {
    const LabeledDataset d = gaussian_classes({Vector::Zero(4), Vector::Constant(4, 0.7), Vector::LinSpaced(4, 0.0, 1.0)}, 10, 1.0, rng);
    const Vector b = Vector::LinSpaced(4, -3.0, 2.0);
    const Matrix test_x = 1.5 * test::gaussian_matrix(300, 4, rng);
    // The marginal kurtosis estimate is coordinate-wise, so the elliptical
    // estimators only see signed permutations as symmetries.
    Matrix signed_perm = Matrix::Zero(4, 4);
    signed_perm(0, 2) = 1.0;
    signed_perm(1, 0) = -1.0;
    signed_perm(2, 3) = -1.0;
    signed_perm(3, 1) = 1.0;
    const std::vector<std::pair<Matrix, std::vector<std::optional<Method>>>> cases = {
        {test::random_orthogonal(4, rng), {std::nullopt, Method::LW}},
        {signed_perm, {std::nullopt, Method::Ell1, Method::Ell2, Method::Ell3, Method::LW}}};
    for (const auto& [q, estimators] : cases) {
      const Matrix moved = (d.samples() * q.transpose()).rowwise() + b.transpose();
      const LabeledDataset e(moved, d.labels());
      for (DiscriminantMode mode : {DiscriminantMode::LDA, DiscriminantMode::QDA}) {
        for (const std::optional<Method>& est : estimators) {
          const DiscriminantModel a = train_rda(d, mode, est);
          const DiscriminantModel c = train_rda(e, mode, est);
          int agree = 0;
          for (Index i = 0; i < test_x.rows(); ++i) {
            const Vector x = test_x.row(i).transpose();
            agree += classify(a, x) == classify(c, q * x + b);
          }
          CHECK(agree == test_x.rows());
        }
      }
    }
  }
}

TEST_CASE("misclassification_rate") {
  Rng rng(5);
  const LabeledDataset d = gaussian_classes({Vector::Zero(2), Vector::Constant(2, 50.0)}, 10, 1.0, rng);
  const DiscriminantModel m = train_rda(d, DiscriminantMode::LDA, std::nullopt);
  CHECK(misclassification_rate(m, d) == 0.0);
  std::vector<int> flipped = d.labels();
  for (int& l : flipped) l = 3 - l;
  CHECK(misclassification_rate(m, LabeledDataset(d.samples(), flipped)) == 1.0);
}

TEST_CASE("gmvp_weights") {
  CHECK((gmvp_weights(CovarianceMatrix::identity(5)) - Vector::Constant(5, 0.2)).norm() < 1e-15);

  Vector d(3);
  d << 1.0, 2.0, 4.0;
  const Vector w = gmvp_weights(CovarianceMatrix::diagonal(d));
  CHECK(w(0) / w(1) == doctest::Approx(2.0));
  CHECK(w(0) / w(2) == doctest::Approx(4.0));

  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const CovarianceMatrix s = test::random_spd(6, rng);
    const Vector g = gmvp_weights(s);
    CHECK(std::abs(g.sum() - 1.0) <= 1e-10);
    CHECK((gmvp_weights(CovarianceMatrix(7.5 * s.matrix())) - g).cwiseAbs().maxCoeff() <= 1e-10);
  }

  const CovarianceMatrix s = test::random_spd(5, rng);
  const Vector g = gmvp_weights(s);
  const double best = g.dot(s.matrix() * g);
  std::normal_distribution<double> z(0.0, 0.05);
  bool minimal = true;
  for (int t = 0; t < 100000; ++t) {
    Vector delta(5);
    for (Index i = 0; i < 5; ++i) delta(i) = z(rng);
    delta.array() -= delta.mean();
    const Vector v = g + delta;
    if (v.dot(s.matrix() * v) < best) minimal = false;
  }
  CHECK(minimal);

  Vector sing(2);
  sing << 1.0, 0.0;
  CHECK_THROWS_AS(gmvp_weights(CovarianceMatrix::diagonal(sing)), SingularityError);
}

TEST_CASE("run_backtest") {
  Rng rng(7);
  SUBCASE("single asset") {
    const Matrix r = 0.01 * test::gaussian_matrix(60, 1, rng);
    BacktestConfig cfg;
    cfg.returns = r;
    cfg.window = 20;
    cfg.hold = 7;
    cfg.estimator = Method::Ell1;
    const BacktestReport rep = run_backtest(cfg);
    const Vector tail = r.col(0).tail(40);
    const double sd = std::sqrt((tail.array() - tail.mean()).square().sum() / 39.0);
    CHECK(rep.realized_risk == doctest::Approx(std::sqrt(250.0) * sd).epsilon(1e-12));
    CHECK(std::isnan(rep.mean_beta));
    CHECK(rep.rebalances == 6);
  }
  SUBCASE("constant single-asset returns have zero risk") {
    BacktestConfig cfg;
    cfg.returns = Matrix::Constant(30, 1, 0.002);
    cfg.window = 10;
    CHECK(run_backtest(cfg).realized_risk == doctest::Approx(0.0));
  }
  SUBCASE("rolling protocol by hand") {
    const Matrix r = 0.01 * test::gaussian_matrix(50, 3, rng) * ar1_covariance(3, 0.3).matrix();
    BacktestConfig cfg;
    cfg.returns = r;
    cfg.window = 12;
    cfg.hold = 10;
    cfg.estimator = Method::LW;
    const BacktestReport rep = run_backtest(cfg);
    CHECK(rep.rebalances == 4);
    REQUIRE(rep.portfolio_returns.size() == 38);
    double beta_sum = 0.0;
    for (Index t = 12, k = 0; t < 50; t += 10, ++k) {
      const SampleSet train = r.middleRows(t - 12, 12);
      const ShrinkageCoefficients c = fit_lw(train);
      beta_sum += c.beta;
      const Vector w = gmvp_weights(assemble_rscm(sample_covariance(train), c));
      for (Index d = t; d < std::min<Index>(t + 10, 50); ++d) {
        CHECK(rep.portfolio_returns(d - 12) == doctest::Approx(r.row(d).dot(w)).epsilon(1e-12));
      }
    }
    CHECK(rep.mean_beta == doctest::Approx(beta_sum / 4.0));
  }
  SUBCASE("plain SCM counts as beta = 1 and hold = 1 is stable") {
    const Matrix r = 0.01 * test::gaussian_matrix(40, 3, rng);
    BacktestConfig cfg;
    cfg.returns = r;
    cfg.window = 10;
    cfg.hold = 1;
    const BacktestReport a = run_backtest(cfg);
    const BacktestReport b = run_backtest(cfg);
    CHECK(a.mean_beta == 1.0);
    CHECK(a.rebalances == 30);
    CHECK(a.portfolio_returns == b.portfolio_returns);
    CHECK(a.realized_risk == b.realized_risk);
  }
  SUBCASE("invalid configurations") {
    BacktestConfig cfg;
    cfg.returns = Matrix::Random(30, 2);
    cfg.window = 25;
    cfg.hold = 10;
    CHECK_THROWS_AS(run_backtest(cfg), ParameterError);
    cfg.window = 10;
    cfg.hold = 0;
    CHECK_THROWS_AS(run_backtest(cfg), ParameterError);
  }
  SUBCASE("estimator failure names the rebalance") {
    Matrix r = 0.01 * test::gaussian_matrix(40, 2, rng);
    r.block(20, 0, 10, 1).setConstant(0.001);
    BacktestConfig cfg;
    cfg.returns = r;
    cfg.window = 10;
    cfg.hold = 10;
    cfg.estimator = Method::Ell2;
    try {
      run_backtest(cfg);
      FAIL("expected BacktestError");
    } catch (const BacktestError& e) {
      CHECK(e.window() == 2);
    }
  }
}

TEST_CASE("Ell1 backtest risk versus plain SCM") {
  const Index p = 20;
  const CovarianceMatrix sigma = ar1_covariance(p, 0.6);
  const EllipticalModel model(Gaussian{}, Vector::Zero(p), CovarianceMatrix(1e-4 * sigma.matrix()));
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = derive_stream(8, seed);
    BacktestConfig cfg;
    cfg.returns = sample(model, 400, rng);
    cfg.window = 25;
    cfg.estimator = Method::Ell1;
    const double ell1 = run_backtest(cfg).realized_risk;
    cfg.estimator.reset();
    wins += ell1 <= run_backtest(cfg).realized_risk;
  }
  CHECK(wins > 10);
}
