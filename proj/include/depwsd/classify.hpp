#pragma once

// Binary classifiers trained from scratch in 64-bit arithmetic:
// L2-regularised logistic regression (full-batch gradient descent with
// backtracking) and a two-layer perceptron
//   p = softmax(W2 * relu(W1 * x + b1) + b2)
// trained by mini-batch gradient descent with momentum.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "depwsd/compose.hpp"
#include "depwsd/error.hpp"

namespace depwsd {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrainConfig {
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 50;
  double tolerance = 1e-6;
  double l2 = 1.0;
  double momentum = 0.9;
  int patience = 5;               // epochs without held-out improvement (MLP)
  double holdout_fraction = 0.1;  // share of training data used for early stopping (MLP)
  int hidden = 0;                 // 0 = hidden width equals input width

  static TrainConfig logistic_defaults() {
    TrainConfig c;
    c.learning_rate = 1.0;  // initial step; backtracking shrinks it
    c.max_epochs = 5000;
    return c;
  }
  static TrainConfig mlp_defaults() { return TrainConfig{}; }

  void validate() const {
    if (!(learning_rate > 0)) fail(Errc::BadConfig, "learning_rate must be positive");
    if (batch_size <= 0) fail(Errc::BadConfig, "batch_size must be positive");
    if (max_epochs <= 0) fail(Errc::BadConfig, "max_epochs must be positive");
    if (!(tolerance > 0)) fail(Errc::BadConfig, "tolerance must be positive");
    if (!(l2 >= 0)) fail(Errc::BadConfig, "l2 must be non-negative");
    if (!(momentum >= 0 && momentum < 1)) fail(Errc::BadConfig, "momentum must lie in [0, 1)");
    if (patience <= 0) fail(Errc::BadConfig, "patience must be positive");
    if (!(holdout_fraction >= 0 && holdout_fraction < 1)) fail(Errc::BadConfig, "holdout_fraction must lie in [0, 1)");
    if (hidden < 0) fail(Errc::BadConfig, "hidden must be non-negative");
  }
};

struct LogRegModel {
  Eigen::VectorXd w;
  double b = 0.0;
  double lambda = 1.0;

  int input_dim() const { return static_cast<int>(w.size()); }
};

struct MlpModel {
  Eigen::MatrixXd W1;  // hidden x H
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;  // 2 x hidden
  Eigen::VectorXd b2;

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }

  static MlpModel zeros(int input, int hidden) {
    return MlpModel{Eigen::MatrixXd::Zero(hidden, input), Eigen::VectorXd::Zero(hidden), Eigen::MatrixXd::Zero(2, hidden),
                    Eigen::VectorXd::Zero(2)};
  }
};

using Model = std::variant<LogRegModel, MlpModel>;

/// Rows are examples. All features must share one length.
inline FeatureMatrix stack_features(std::span<const FeatureVector> features) {
  if (features.empty()) return FeatureMatrix(0, 0);
  const auto h = features.front().values.size();
  FeatureMatrix X(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(h));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& v = features[i].values;
    if (v.size() != h) fail(Errc::DimensionMismatch, "feature " + std::to_string(i) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(h));
    X.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(h));
  }
  return X;
}

namespace detail {

inline void check_training_set(const FeatureMatrix& X, std::span<const int> y) {
  if (X.rows() != static_cast<Eigen::Index>(y.size())) {
    fail(Errc::DimensionMismatch, std::to_string(X.rows()) + " feature rows but " + std::to_string(y.size()) + " labels");
  }
  if (y.empty()) fail(Errc::EmptyDataset, "no training examples");
  bool seen[2] = {false, false};
  for (int label : y) {
    if (label != 0 && label != 1) fail(Errc::BadLabel, "labels must be 0 or 1");
    seen[label] = true;
  }
  if (!seen[0] || !seen[1]) fail(Errc::DegenerateLabels, "training labels contain a single class");
  if (!X.allFinite()) fail(Errc::NonFiniteInput, "training features contain non-finite values");
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Fisher-Yates driven directly by the engine so results do not depend on the
// standard library's distribution implementations.
inline void shuffle(std::vector<int>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Logistic regression

/// Mean binary cross-entropy plus (lambda / 2) * |w|^2; the bias is not penalised.
inline double lr_objective(const FeatureMatrix& X, std::span<const int> y, const Eigen::VectorXd& w, double b, double lambda) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double loss = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += detail::softplus(z[i]) - y[static_cast<std::size_t>(i)] * z[i];
  return loss / static_cast<double>(z.size()) + 0.5 * lambda * w.squaredNorm();
}

inline LogRegModel lr_train(const FeatureMatrix& X, std::span<const int> y, const TrainConfig& cfg) {
  cfg.validate();
  detail::check_training_set(X, y);
  const auto n = static_cast<double>(X.rows());
  Eigen::VectorXd yv(X.rows());
  for (Eigen::Index i = 0; i < yv.size(); ++i) yv[i] = y[static_cast<std::size_t>(i)];

  LogRegModel m{Eigen::VectorXd::Zero(X.cols()), 0.0, cfg.l2};
  double loss = lr_objective(X, y, m.w, m.b, m.lambda);
  double step = cfg.learning_rate;

  // Diagonal scaling from the curvature bound 0.25 * mean(x_j^2) + lambda, so
  // the bias and heavily penalised weights move at comparable rates.
  const Eigen::VectorXd dw = (0.25 * X.colwise().squaredNorm().transpose().array() / n + m.lambda).cwiseMax(1e-12).inverse();
  const double db = 4.0;

  for (int it = 0; it < cfg.max_epochs; ++it) {
    Eigen::VectorXd p = (X * m.w).array() + m.b;
    p = p.unaryExpr([](double z) { return detail::sigmoid(z); });
    const Eigen::VectorXd r = p - yv;
    const Eigen::VectorXd gw = X.transpose() * r / n + m.lambda * m.w;
    const double gb = r.sum() / n;
    const double gmax = std::max(gw.size() ? gw.cwiseAbs().maxCoeff() : 0.0, std::abs(gb));
    if (gmax < cfg.tolerance) break;

    // Armijo backtracking: halve until the objective drops enough.
    const Eigen::VectorXd sw = dw.cwiseProduct(gw);
    const double sb = db * gb;
    const double decrease = gw.dot(sw) + gb * sb;
    bool moved = false;
    for (int halvings = 0; halvings < 80; ++halvings) {
      Eigen::VectorXd w_new = m.w - step * sw;
      const double b_new = m.b - step * sb;
      const double candidate = lr_objective(X, y, w_new, b_new, m.lambda);
      if (!std::isfinite(candidate)) fail(Errc::NonFiniteLoss, "logistic objective became non-finite");
      if (candidate <= loss - 1e-4 * step * decrease) {
        m.w = std::move(w_new);
        m.b = b_new;
        loss = candidate;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no representable decrease left
    step = std::min(step * 2.0, cfg.learning_rate * 1e6);
  }
  return m;
}

inline LogRegModel lr_train(std::span<const FeatureVector> X, std::span<const int> y, const TrainConfig& cfg) {
  return lr_train(stack_features(X), y, cfg);
}

inline double lr_predict(const LogRegModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim()) {
    fail(Errc::DimensionMismatch, "input has length " + std::to_string(x.size()) + ", model expects " + std::to_string(m.input_dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return detail::sigmoid(m.w.dot(xv) + m.b);
}

// ---------------------------------------------------------------------------
// Two-layer perceptron

struct MlpGradient {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
};

namespace detail {

struct MlpBatchState {
  Eigen::MatrixXd Z1;  // batch x hidden, pre-activation
  Eigen::MatrixXd A1;
  Eigen::MatrixXd P;   // batch x 2
  double loss = 0;     // mean cross-entropy
};

template <class Rows>
MlpBatchState mlp_batch_forward(const MlpModel& m, const Rows& X, std::span<const int> y) {
  MlpBatchState s;
  s.Z1 = X * m.W1.transpose();
  s.Z1.rowwise() += m.b1.transpose();
  s.A1 = s.Z1.cwiseMax(0.0);
  Eigen::MatrixXd Z2 = s.A1 * m.W2.transpose();
  Z2.rowwise() += m.b2.transpose();
  s.P.resize(Z2.rows(), 2);
  double loss = 0;
  for (Eigen::Index i = 0; i < Z2.rows(); ++i) {
    const double mx = std::max(Z2(i, 0), Z2(i, 1));
    const double e0 = std::exp(Z2(i, 0) - mx), e1 = std::exp(Z2(i, 1) - mx);
    const double sum = e0 + e1;
    s.P(i, 0) = e0 / sum;
    s.P(i, 1) = e1 / sum;
    if (!y.empty()) loss += mx + std::log(sum) - Z2(i, y[static_cast<std::size_t>(i)]);
  }
  s.loss = Z2.rows() ? loss / static_cast<double>(Z2.rows()) : 0.0;
  return s;
}

template <class Rows>
MlpGradient mlp_batch_backward(const MlpModel& m, const Rows& X, std::span<const int> y, const MlpBatchState& s) {
  const auto batch = static_cast<double>(X.rows());
  Eigen::MatrixXd dZ2 = s.P;
  for (Eigen::Index i = 0; i < dZ2.rows(); ++i) dZ2(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  dZ2 /= batch;
  MlpGradient g;
  g.W2 = dZ2.transpose() * s.A1;
  g.b2 = dZ2.colwise().sum().transpose();
  Eigen::MatrixXd dZ1 = dZ2 * m.W2;
  dZ1 = dZ1.cwiseProduct((s.Z1.array() > 0.0).cast<double>().matrix());
  g.W1 = dZ1.transpose() * X;
  g.b1 = dZ1.colwise().sum().transpose();
  return g;
}

}  // namespace detail

/// Mean cross-entropy over (X, y) and its exact gradient.
inline std::pair<double, MlpGradient> mlp_loss_and_gradient(const MlpModel& m, const FeatureMatrix& X, std::span<const int> y) {
  if (X.cols() != m.input_dim()) fail(Errc::DimensionMismatch, "input width does not match model");
  auto s = detail::mlp_batch_forward(m, X, y);
  return {s.loss, detail::mlp_batch_backward(m, X, y, s)};
}

inline std::array<double, 2> mlp_forward(const MlpModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim()) {
    fail(Errc::DimensionMismatch, "input has length " + std::to_string(x.size()) + ", model expects " + std::to_string(m.input_dim()));
  }
  for (double v : x)
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "input contains non-finite values");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd hidden = (m.W1 * xv + m.b1).cwiseMax(0.0);
  const Eigen::Vector2d z = m.W2 * hidden + m.b2;
  const double mx = z.maxCoeff();
  const double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

namespace detail {

inline double mlp_accuracy(const MlpModel& m, const FeatureMatrix& X, std::span<const int> y) {
  auto s = mlp_batch_forward(m, X, {});
  int correct = 0;
  for (Eigen::Index i = 0; i < s.P.rows(); ++i) correct += (s.P(i, 1) > s.P(i, 0) ? 1 : 0) == y[static_cast<std::size_t>(i)];
  return static_cast<double>(correct) / static_cast<double>(s.P.rows());
}

inline FeatureMatrix gather_rows(const FeatureMatrix& X, std::span<const int> idx) {
  FeatureMatrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

}  // namespace detail

/// Xavier-uniform initialisation from a generator seeded with `seed`.
inline MlpModel mlp_init(int input, int hidden, std::mt19937_64& rng) {
  auto m = MlpModel::zeros(input, hidden);
  const auto fill = [&](Eigen::MatrixXd& W, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = (2.0 * detail::uniform01(rng) - 1.0) * a;
  };
  fill(m.W1, input, hidden);
  fill(m.W2, hidden, 2);
  return m;
}

struct MlpTrainLog {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_holdout_accuracy = 0;
  std::vector<double> epoch_loss;
};

inline MlpModel mlp_train(const FeatureMatrix& X, std::span<const int> y, const TrainConfig& cfg, MlpTrainLog* log = nullptr) {
  cfg.validate();
  detail::check_training_set(X, y);
  const int input = static_cast<int>(X.cols());
  const int hidden = cfg.hidden > 0 ? cfg.hidden : input;
  std::mt19937_64 rng(cfg.seed);
  MlpModel m = mlp_init(input, hidden, rng);

  std::vector<int> order(static_cast<std::size_t>(X.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<int> holdout;
  const auto n_hold = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(order.size()));
  if (n_hold > 0) {
    detail::shuffle(order, rng);
    holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    order.erase(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::sort(order.begin(), order.end());
    std::sort(holdout.begin(), holdout.end());
  }
  FeatureMatrix X_hold;
  std::vector<int> y_hold;
  if (!holdout.empty()) {
    X_hold = detail::gather_rows(X, holdout);
    for (int i : holdout) y_hold.push_back(y[static_cast<std::size_t>(i)]);
  }

  MlpGradient vel{Eigen::MatrixXd::Zero(hidden, input), Eigen::VectorXd::Zero(hidden), Eigen::MatrixXd::Zero(2, hidden),
                  Eigen::VectorXd::Zero(2)};
  const auto apply = [&](auto& param, auto& v, const auto& g) {
    v = cfg.momentum * v - cfg.learning_rate * g;
    param += v;
  };

  MlpModel best = m;
  double best_acc = -1;
  int stale = 0;
  MlpTrainLog local;
  std::vector<int> yb;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    detail::shuffle(order, rng);
    double epoch_loss = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto count = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      std::span<const int> idx(order.data() + start, count);
      const FeatureMatrix Xb = detail::gather_rows(X, idx);
      yb.clear();
      for (int i : idx) yb.push_back(y[static_cast<std::size_t>(i)]);
      const auto state = detail::mlp_batch_forward(m, Xb, yb);
      if (!std::isfinite(state.loss)) {
        fail(Errc::NonFiniteLoss, "loss became non-finite in epoch " + std::to_string(epoch) + "; lower the learning rate");
      }
      const auto g = detail::mlp_batch_backward(m, Xb, yb, state);
      apply(m.W1, vel.W1, g.W1);
      apply(m.b1, vel.b1, g.b1);
      apply(m.W2, vel.W2, g.W2);
      apply(m.b2, vel.b2, g.b2);
      epoch_loss += state.loss * static_cast<double>(count);
      seen += count;
    }
    local.epoch_loss.push_back(epoch_loss / static_cast<double>(seen));
    local.epochs_run = epoch;
    if (!m.W1.allFinite() || !m.W2.allFinite()) fail(Errc::NonFiniteLoss, "weights became non-finite; lower the learning rate");

    if (holdout.empty()) continue;
    const double acc = detail::mlp_accuracy(m, X_hold, y_hold);
    if (acc > best_acc) {
      best_acc = acc;
      best = m;
      local.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  if (holdout.empty()) {
    best = m;
    local.best_epoch = local.epochs_run;
  }
  local.best_holdout_accuracy = std::max(best_acc, 0.0);
  if (log) *log = std::move(local);
  return best;
}

inline MlpModel mlp_train(std::span<const FeatureVector> X, std::span<const int> y, const TrainConfig& cfg, MlpTrainLog* log = nullptr) {
  return mlp_train(stack_features(X), y, cfg, log);
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

/// Probability of class 1.
inline double predict_probability(const Model& model, std::span<const double> x) {
  if (const auto* lr = std::get_if<LogRegModel>(&model)) return lr_predict(*lr, x);
  return mlp_forward(std::get<MlpModel>(model), x)[1];
}

inline int input_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

/// Class 1 only when strictly more likely; exact ties go to class 0.
inline int predict_label(const Model& model, std::span<const double> x) {
  if (const auto* mlp = std::get_if<MlpModel>(&model)) {
    auto p = mlp_forward(*mlp, x);
    return p[1] > p[0] ? 1 : 0;
  }
  return lr_predict(std::get<LogRegModel>(model), x) > 0.5 ? 1 : 0;
}

inline double evaluate(const Model& model, const FeatureMatrix& X, std::span<const int> y) {
  if (X.rows() == 0) fail(Errc::EmptyDataset, "evaluation set is empty");
  if (X.rows() != static_cast<Eigen::Index>(y.size())) fail(Errc::DimensionMismatch, "feature rows and labels differ in count");
  if (X.cols() != input_dim(model)) {
    fail(Errc::DimensionMismatch, "features have length " + std::to_string(X.cols()) + ", model expects " + std::to_string(input_dim(model)));
  }
  if (const auto* mlp = std::get_if<MlpModel>(&model)) return detail::mlp_accuracy(*mlp, X, y);
  const auto& lr = std::get<LogRegModel>(model);
  const Eigen::VectorXd z = (X * lr.w).array() + lr.b;
  int correct = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) correct += (detail::sigmoid(z[i]) > 0.5 ? 1 : 0) == y[static_cast<std::size_t>(i)];
  return static_cast<double>(correct) / static_cast<double>(z.size());
}

inline double evaluate(const Model& model, std::span<const FeatureVector> X, std::span<const int> y) {
  return evaluate(model, stack_features(X), y);
}

}  // namespace depwsd
