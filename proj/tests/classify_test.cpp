#include "depwsd/classify.hpp"
#include "depwsd/model_io.hpp"

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace depwsd;

namespace {

FeatureMatrix matrix(std::initializer_list<std::initializer_list<double>> rows) {
  FeatureMatrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) X(r, c++) = v;
    ++r;
  }
  return X;
}


double plain_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Loop-based cross-entropy of the two-layer network, kept separate from the
// library implementation so it can serve as the finite-difference reference.
double naive_mlp_loss(const MlpModel& m, const FeatureMatrix& X, const std::vector<int>& y) {
  double total = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> h(static_cast<std::size_t>(m.W1.rows()));
    for (Eigen::Index r = 0; r < m.W1.rows(); ++r) {
      double s = m.b1[r];
      for (Eigen::Index c = 0; c < X.cols(); ++c) s += m.W1(r, c) * X(i, c);
      h[static_cast<std::size_t>(r)] = s > 0 ? s : 0;
    }
    double z[2];
    for (int k = 0; k < 2; ++k) {
      z[k] = m.b2[k];
      for (Eigen::Index r = 0; r < m.W2.cols(); ++r) z[k] += m.W2(k, r) * h[static_cast<std::size_t>(r)];
    }
    const double mx = std::max(z[0], z[1]);
    const double lse = mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
    total += lse - z[y[static_cast<std::size_t>(i)]];
  }
  return total / static_cast<double>(X.rows());
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-7}); }

}  // namespace

TEST(LogisticRegression, RejectsDegenerateInputs) {
  const auto X = matrix({{1.0}, {2.0}});
  const std::vector<int> same = {1, 1};
  EXPECT_DEPWSD_ERROR(lr_train(X, same, TrainConfig::logistic_defaults()), Errc::DegenerateLabels);
  const std::vector<int> one = {1};
  EXPECT_DEPWSD_ERROR(lr_train(X, one, TrainConfig::logistic_defaults()), Errc::DimensionMismatch);
  auto bad = X;
  bad(0, 0) = std::nan("");
  const std::vector<int> ok = {0, 1};
  EXPECT_DEPWSD_ERROR(lr_train(bad, ok, TrainConfig::logistic_defaults()), Errc::NonFiniteInput);
  EXPECT_DEPWSD_ERROR(lr_train(FeatureMatrix(0, 1), std::vector<int>{}, TrainConfig::logistic_defaults()), Errc::EmptyDataset);
}

TEST(LogisticRegression, SymmetricPairMatchesAnalyticOptimum) {
  // Points (-1, 0) and (+1, 1) with lambda = 1: by symmetry b = 0 and the
  // stationarity condition reduces to w = sigmoid(-w).
  const auto X = matrix({{-1.0}, {1.0}});
  const std::vector<int> y = {0, 1};
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - plain_sigmoid(-mid) < 0 ? lo : hi) = mid;
  }
  const double w_star = 0.5 * (lo + hi);

  // Independent grid minimum at 0.01 resolution.
  double grid_best = 1e300, grid_w = 0, grid_b = 0;
  for (int iw = -1000; iw <= 1000; ++iw) {
    for (int ib = -1000; ib <= 1000; ib += 10) {
      const double w = iw * 0.01, b = ib * 0.01;
      const double f = 0.5 * (std::log1p(std::exp(-(w + b))) + std::log1p(std::exp(-w + b))) + 0.5 * w * w;
      if (f < grid_best) grid_best = f, grid_w = w, grid_b = b;
    }
  }

  auto cfg = TrainConfig::logistic_defaults();
  cfg.l2 = 1.0;
  auto m = lr_train(X, y, cfg);
  EXPECT_NEAR(m.w[0], w_star, 1e-5);
  EXPECT_NEAR(m.b, 0.0, 1e-5);
  EXPECT_NEAR(m.w[0], grid_w, 0.01);
  EXPECT_NEAR(m.b, grid_b, 0.1);
  EXPECT_LE(lr_objective(X, y, m.w, m.b, 1.0), grid_best + 1e-9);
}

TEST(LogisticRegression, HeavyPenaltyRecoversClassPrior) {
  const auto X = matrix({{0.3, -1.0}, {1.2, 0.4}, {-0.7, 2.0}, {0.1, 0.1}});
  const std::vector<int> y = {1, 1, 0, 1};
  auto cfg = TrainConfig::logistic_defaults();
  cfg.l2 = 1e6;
  auto m = lr_train(X, y, cfg);
  EXPECT_LT(m.w.norm(), 1e-2);
  EXPECT_NEAR(plain_sigmoid(m.b), 0.75, 1e-3);
}

TEST(LogisticRegression, ObjectiveNeverIncreasesWithMoreIterations) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  FeatureMatrix X(40, 3);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
    y[static_cast<std::size_t>(i)] = X(i, 0) + 0.5 * g(rng) > 0 ? 1 : 0;
  }
  auto cfg = TrainConfig::logistic_defaults();
  double prev = lr_objective(X, y, Eigen::VectorXd::Zero(3), 0.0, cfg.l2);
  for (int iters = 1; iters <= 30; ++iters) {
    cfg.max_epochs = iters;
    auto m = lr_train(X, y, cfg);
    const double f = lr_objective(X, y, m.w, m.b, cfg.l2);
    EXPECT_LE(f, prev + 1e-15) << "iteration " << iters;
    prev = f;
  }
}

TEST(LogisticRegression, PredictionBasics) {
  LogRegModel zero{Eigen::VectorXd::Zero(3), 0.0, 1.0};
  const std::vector<double> x = {4, -2, 7};
  EXPECT_EQ(lr_predict(zero, x), 0.5);
  EXPECT_EQ(predict_label(Model{zero}, x), 0);  // tie goes to class 0
  LogRegModel m{Eigen::Vector3d(1.0, 0.0, 0.0), 0.0, 1.0};
  double prev = 0;
  for (double t = -5; t <= 5; t += 0.5) {
    const std::vector<double> p = {t, 0, 0};
    const double q = lr_predict(m, p);
    EXPECT_GT(q, prev);
    prev = q;
  }
  EXPECT_DEPWSD_ERROR(lr_predict(m, std::vector<double>{1.0}), Errc::DimensionMismatch);
}

TEST(Mlp, ZeroModelIsUniform) {
  auto m = MlpModel::zeros(3, 4);
  const std::vector<double> x = {1, 2, 3};
  auto p = mlp_forward(m, x);
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
  EXPECT_EQ(predict_label(Model{m}, x), 0);
}

TEST(Mlp, OutputsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(9);
  auto m = mlp_init(5, 7, rng);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = 3 * g(rng);
    auto p = mlp_forward(m, x);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
    EXPECT_GE(p[0], 0.0);
    EXPECT_GE(p[1], 0.0);
    auto shifted = m;
    shifted.b2.array() += 123.0;
    auto q = mlp_forward(shifted, x);
    EXPECT_NEAR(q[1], p[1], 1e-12);
  }
}

TEST(Mlp, ForwardErrors) {
  auto m = MlpModel::zeros(3, 2);
  EXPECT_DEPWSD_ERROR(mlp_forward(m, std::vector<double>{1, 2}), Errc::DimensionMismatch);
  EXPECT_DEPWSD_ERROR(mlp_forward(m, std::vector<double>{1, std::numeric_limits<double>::infinity(), 2}), Errc::NonFiniteInput);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  const int input = 6, hidden = 16, n = 8;
  auto m = mlp_init(input, hidden, rng);
  m.b1.setConstant(0.05);
  std::normal_distribution<double> g;
  FeatureMatrix X(n, input);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < input; ++j) X(i, j) = g(rng);
    y[static_cast<std::size_t>(i)] = i % 2;
  }
  auto [loss, grad] = mlp_loss_and_gradient(m, X, y);
  EXPECT_NEAR(loss, naive_mlp_loss(m, X, y), 1e-12);

  const double h = 1e-5;
  double worst = 0;
  const auto check = [&](auto& param, const auto& analytic) {
    for (Eigen::Index k = 0; k < param.size(); ++k) {
      const double saved = param.data()[k];
      param.data()[k] = saved + h;
      const double up = naive_mlp_loss(m, X, y);
      param.data()[k] = saved - h;
      const double down = naive_mlp_loss(m, X, y);
      param.data()[k] = saved;
      worst = std::max(worst, rel_err(analytic.data()[k], (up - down) / (2 * h)));
    }
  };
  check(m.W1, grad.W1);
  check(m.b1, grad.b1);
  check(m.W2, grad.W2);
  check(m.b2, grad.b2);
  EXPECT_LT(worst, 1e-5);
}

TEST(Mlp, TrainingIsDeterministic) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  FeatureMatrix X(60, 4);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = g(rng);
    y[static_cast<std::size_t>(i)] = X(i, 1) > 0;
  }
  TrainConfig cfg;
  cfg.seed = 77;
  cfg.max_epochs = 15;
  auto a = mlp_train(X, y, cfg);
  auto b = mlp_train(X, y, cfg);
  EXPECT_EQ(serialize_model(a), serialize_model(b));
  cfg.seed = 78;
  EXPECT_NE(serialize_model(mlp_train(X, y, cfg)), serialize_model(a));
}

TEST(Mlp, FitsLinearlySeparableSet) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  FeatureMatrix X(20, 2);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) {
    const int label = i % 2;
    double a, b;
    do {
      a = u(rng);
      b = u(rng);
    } while (std::abs(a + b) < 0.5 || (a + b > 0) != (label == 1));
    X(i, 0) = a;
    X(i, 1) = b;
    y[static_cast<std::size_t>(i)] = label;
  }
  TrainConfig cfg;
  cfg.hidden = 2;
  cfg.max_epochs = 200;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 4;
  cfg.holdout_fraction = 0;
  MlpTrainLog log;
  auto m = mlp_train(X, y, cfg, &log);
  EXPECT_EQ(evaluate(Model{m}, X, y), 1.0);
  EXPECT_EQ(log.epochs_run, 200);
  EXPECT_LT(log.epoch_loss.back(), log.epoch_loss.front());
}

TEST(Mlp, EarlyStoppingHonoursPatience) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  FeatureMatrix X(100, 3);
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
    y[static_cast<std::size_t>(i)] = X(i, 0) > 0;
  }
  TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.patience = 3;
  cfg.learning_rate = 0.05;
  MlpTrainLog log;
  mlp_train(X, y, cfg, &log);
  EXPECT_LT(log.epochs_run, 500);
  EXPECT_EQ(log.epochs_run - log.best_epoch, 3);
}

TEST(Evaluate, AccuracyCounts) {
  LogRegModel m{Eigen::VectorXd::Ones(1), 0.0, 1.0};
  const auto X = matrix({{1.0}, {-1.0}, {2.0}, {-3.0}});
  EXPECT_EQ(evaluate(Model{m}, X, std::vector<int>{1, 0, 1, 0}), 1.0);
  EXPECT_EQ(evaluate(Model{m}, X, std::vector<int>{0, 1, 0, 1}), 0.0);
  EXPECT_EQ(evaluate(Model{m}, X, std::vector<int>{1, 0, 1, 1}), 0.75);
  EXPECT_DEPWSD_ERROR(evaluate(Model{m}, FeatureMatrix(0, 1), std::vector<int>{}), Errc::EmptyDataset);
  EXPECT_DEPWSD_ERROR(evaluate(Model{m}, matrix({{1.0, 2.0}}), std::vector<int>{1}), Errc::DimensionMismatch);
}

TEST(ModelIo, RoundTripPredictsBitIdentically) {
  std::mt19937_64 rng(8);
  auto mlp = mlp_init(5, 3, rng);
  mlp.b1 << 0.1, -0.2, 1e-300;
  mlp.b2 << -0.0, 3.5;
  LogRegModel lr{Eigen::VectorXd::Random(5), -0.125, 0.5};
  std::normal_distribution<double> g;
  for (const Model& model : {Model{mlp}, Model{lr}}) {
    const auto path = scratch_dir() / "model.txt";
    save_model(path, model);
    const Model back = load_model(path);
    EXPECT_EQ(serialize_model(back), serialize_model(model));
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(5);
      for (auto& v : x) v = g(rng);
      EXPECT_EQ(predict_probability(back, x), predict_probability(model, x));
    }
  }
}

TEST(ModelIo, RejectsBadFiles) {
  const std::string good = serialize_model(Model{LogRegModel{Eigen::VectorXd::Ones(2), 0.5, 1.0}});
  EXPECT_NO_THROW(deserialize_model(good));
  EXPECT_DEPWSD_ERROR(deserialize_model(""), Errc::BadModelFile);
  EXPECT_DEPWSD_ERROR(deserialize_model("depwsd-model v2\n"), Errc::BadModelFile);
  EXPECT_DEPWSD_ERROR(deserialize_model(good.substr(0, good.size() - 4)), Errc::BadModelFile);
  std::string corrupt = good;
  corrupt[corrupt.find("tensor w") + 20] = 'z';
  EXPECT_DEPWSD_ERROR(deserialize_model(corrupt), Errc::BadModelFile);
  std::string kind = good;
  kind.replace(kind.find("kind lr"), 7, "kind svm");
  EXPECT_DEPWSD_ERROR(deserialize_model(kind), Errc::BadModelFile);
  EXPECT_DEPWSD_ERROR(load_model(scratch_dir() / "does-not-exist.model"), Errc::IoError);
}
