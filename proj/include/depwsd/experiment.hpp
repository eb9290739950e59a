#pragma once

// Experiment matrix: every variant (embedding x marker x amplification) is
// composed for the train and dev sets, then for each training size the
// classifier is fit on the first N training records and scored on dev.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "depwsd/classify.hpp"
#include "depwsd/compose.hpp"
#include "depwsd/config.hpp"
#include "depwsd/dataset.hpp"
#include "depwsd/preprocess.hpp"
#include "depwsd/report.hpp"

namespace depwsd {

enum class ClassifierKind { Logistic, Mlp };

inline ClassifierKind parse_classifier(const std::string& s) {
  if (s == "lr" || s == "logistic") return ClassifierKind::Logistic;
  if (s == "mlp") return ClassifierKind::Mlp;
  fail(Errc::BadConfig, "unknown classifier '" + s + "' (expected lr or mlp)");
}

inline const char* classifier_name(ClassifierKind k) { return k == ClassifierKind::Logistic ? "lr" : "mlp"; }

inline DependentFilter parse_dependent_filter(const std::string& s) {
  if (s == "all") return DependentFilter::All;
  if (s == "no_punct") return DependentFilter::NoPunct;
  fail(Errc::BadConfig, "unknown dependents filter '" + s + "' (expected all or no_punct)");
}

struct ExperimentSpec {
  std::string title;
  ClassifierKind classifier = ClassifierKind::Mlp;
  std::vector<VariantTag> variants;
  std::vector<int> train_sizes;
  TrainConfig cfg = TrainConfig::mlp_defaults();
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path embeddings_dir;
  std::filesystem::path parses_dir;
  std::filesystem::path cache_dir;
  int dim = kDefaultDim;
  double amplification = kDefaultAmplification;
  DependentFilter dependents = DependentFilter::All;
};

struct Preset {
  std::string title;
  std::string classifier;
  std::string variants;  // comma list, combined with markers unless a full tag
  std::string markers;
  std::string train_sizes;
};

/// Layouts of the published tables and learning curve.
inline const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> p = {
      {"table2", {"Logistic regression, [SEP] boundary marker", "lr", "baseline,concat+sum,concat+average", "sep", ""}},
      {"table3", {"Logistic regression, no boundary marker", "lr", "baseline,concat+sum,concat+average", "none", ""}},
      {"table4", {"Logistic regression, baseline with different boundary markers", "lr", "baseline", "sep,none,scalar9999", ""}},
      {"table5", {"MLP, baseline and summed concatenation with different boundary markers", "mlp", "baseline,concat+sum", "sep,none,scalar9999", ""}},
      {"table6", {"MLP, dimensionality reduction", "mlp", "concat+sum,head_only,elementwise+sum", "none", ""}},
      {"table7", {"MLP, target amplification", "mlp", "concat+sum/none/amp=0,concat+sum/none/amp=1", "none", ""}},
      {"table8", {"MLP, cross-lingual evaluation", "mlp", "concat+sum", "none", ""}},
      {"fig2", {"MLP, test accuracy vs. training size", "mlp", "baseline,concat+sum", "none", "1000:8000:500"}},
  };
  return p;
}

/// Embedding list x marker list; entries that already name a marker are kept as is.
inline std::vector<VariantTag> expand_variants(const std::vector<std::string>& variants, const std::vector<std::string>& markers) {
  std::vector<VariantTag> out;
  const auto push = [&](VariantTag t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  for (const auto& v : variants) {
    if (v.find('/') != std::string::npos) {
      push(parse_variant(v));
      continue;
    }
    for (const auto& m : markers.empty() ? std::vector<std::string>{"none"} : markers) push(parse_variant(v + "/" + m));
  }
  return out;
}

inline TrainConfig train_config_from(const Settings& s, ClassifierKind kind) {
  TrainConfig c = kind == ClassifierKind::Logistic ? TrainConfig::logistic_defaults() : TrainConfig::mlp_defaults();
  c.seed = s.number_or<std::uint64_t>("train.seed", c.seed);
  c.learning_rate = s.number_or<double>("train.learning_rate", c.learning_rate);
  c.batch_size = s.number_or<int>("train.batch_size", c.batch_size);
  c.max_epochs = s.number_or<int>("train.max_epochs", c.max_epochs);
  c.tolerance = s.number_or<double>("train.tolerance", c.tolerance);
  c.l2 = s.number_or<double>("train.l2", c.l2);
  c.momentum = s.number_or<double>("train.momentum", c.momentum);
  c.patience = s.number_or<int>("train.patience", c.patience);
  c.holdout_fraction = s.number_or<double>("train.holdout_fraction", c.holdout_fraction);
  c.hidden = s.number_or<int>("train.hidden", c.hidden);
  c.validate();
  return c;
}

inline ComposeOptions compose_options_from(const Settings& s, const VariantTag& tag) {
  ComposeOptions o;
  o.variant = tag;
  o.dim = s.number_or<int>("features.dim", kDefaultDim);
  o.amplification = s.number_or<double>("features.amplify_factor", kDefaultAmplification);
  o.dependents = parse_dependent_filter(s.get_or("features.dependents", "all"));
  if (o.dim <= 0) fail(Errc::BadConfig, "features.dim must be positive");
  return o;
}

/// Builds the spec from settings; a preset fills in whatever is not set.
inline ExperimentSpec experiment_from(const Settings& s) {
  Settings eff = s;
  if (auto name = s.get("experiment.preset")) {
    auto it = presets().find(*name);
    if (it == presets().end()) fail(Errc::BadConfig, "unknown preset '" + *name + "'");
    const auto& p = it->second;
    const auto fill = [&](const std::string& key, const std::string& value) {
      if (!eff.has(key) && !value.empty()) eff.set(key, value);
    };
    fill("experiment.title", p.title);
    fill("train.classifier", p.classifier);
    fill("features.variant", p.variants);
    fill("features.marker", p.markers);
    fill("experiment.train_sizes", p.train_sizes);
  }
  ExperimentSpec spec;
  spec.title = eff.get_or("experiment.title", "");
  spec.classifier = parse_classifier(eff.get_or("train.classifier", "mlp"));
  auto variants = eff.list("features.variant");
  if (variants.empty()) variants = {"concat+sum"};
  spec.variants = expand_variants(variants, eff.list("features.marker"));
  if (auto sizes = eff.get("experiment.train_sizes")) spec.train_sizes = parse_int_list(*sizes);
  spec.cfg = train_config_from(eff, spec.classifier);
  spec.train_path = eff.require("data.train");
  spec.dev_path = eff.require("data.dev");
  spec.embeddings_dir = eff.require("data.embeddings");
  spec.parses_dir = eff.require("data.parses");
  spec.cache_dir = eff.get_or("data.cache_dir", "");
  const auto base = compose_options_from(eff, VariantTag{});
  spec.dim = base.dim;
  spec.amplification = base.amplification;
  spec.dependents = base.dependents;
  return spec;
}

inline std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& spec) {
  const auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> out = {
      {"classifier", classifier_name(spec.classifier)},
      {"embedding dim", std::to_string(spec.dim)},
      {"seed", std::to_string(spec.cfg.seed)},
      {"learning_rate", num(spec.cfg.learning_rate)},
      {"max_epochs", std::to_string(spec.cfg.max_epochs)},
      {"dependents", spec.dependents == DependentFilter::All ? "all" : "no_punct"},
  };
  if (spec.classifier == ClassifierKind::Logistic) {
    out.emplace_back("tolerance", num(spec.cfg.tolerance));
    out.emplace_back("l2", num(spec.cfg.l2));
  }
  if (spec.classifier == ClassifierKind::Mlp) {
    out.emplace_back("momentum", num(spec.cfg.momentum));
    out.emplace_back("batch_size", std::to_string(spec.cfg.batch_size));
    out.emplace_back("patience", std::to_string(spec.cfg.patience));
    out.emplace_back("holdout_fraction", num(spec.cfg.holdout_fraction));
    out.emplace_back("hidden", spec.cfg.hidden > 0 ? std::to_string(spec.cfg.hidden) + " (reduced from input width)" : "input width");
  }
  if (std::any_of(spec.variants.begin(), spec.variants.end(), [](const VariantTag& t) { return t.amplified; })) {
    out.emplace_back("amplify_factor", num(spec.amplification));
  }
  return out;
}

inline Model train_model(ClassifierKind kind, const FeatureMatrix& X, std::span<const int> y, const TrainConfig& cfg) {
  if (kind == ClassifierKind::Logistic) return lr_train(X, y, cfg);
  return mlp_train(X, y, cfg);
}

namespace detail {

inline FeatureMatrix stack_rows(const FeatureSet& fs_, std::size_t count) {
  return stack_features(std::span<const FeatureVector>(fs_.features.data(), count));
}

inline void require_labels(const FeatureSet& fs_, const std::string& which) {
  for (std::size_t i = 0; i < fs_.labels.size(); ++i)
    if (fs_.labels[i] < 0) fail(Errc::MissingField, which + " record '" + fs_.ids[i] + "' has no label");
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  using clock = std::chrono::steady_clock;
  if (spec.train_sizes.empty()) fail(Errc::InsufficientData, "no training sizes requested");
  if (spec.variants.empty()) fail(Errc::InsufficientData, "no feature variants requested");

  const auto train = load_dataset(spec.train_path);
  const auto dev = load_dataset(spec.dev_path);
  std::set<std::string> train_ids;
  for (const auto& r : train) train_ids.insert(r.id);
  for (const auto& r : dev)
    if (train_ids.contains(r.id)) fail(Errc::BadConfig, "record '" + r.id + "' appears in both the training and the evaluation set");
  for (int n : spec.train_sizes) {
    if (n <= 0 || n > static_cast<int>(train.size())) {
      fail(Errc::InsufficientData, "train size " + std::to_string(n) + " requested, " + std::to_string(train.size()) + " records available");
    }
  }
  if (dev.empty()) fail(Errc::EmptyDataset, "evaluation set is empty");

  ExperimentReport report;
  report.title = spec.title;
  report.settings = describe(spec);
  if (spec.classifier == ClassifierKind::Mlp) {
    report.notes.push_back("early stopping uses a held-out share of each training subset; the evaluation set only scores");
  }
  if (std::any_of(spec.variants.begin(), spec.variants.end(), [](const VariantTag& t) { return t.marker == MarkerKind::Sep; })) {
    report.notes.push_back("sep@s1: the separator vector comes from the first sentence of each pair");
  }

  ArtifactStore store(spec.embeddings_dir, spec.parses_dir);
  const auto train_name = spec.train_path.stem().string();
  const auto dev_name = spec.dev_path.stem().string();
  for (const auto& tag : spec.variants) {
    ComposeOptions opt{tag, spec.dim, spec.amplification, spec.dependents};
    const auto ftrain = preprocess(train, store, opt, spec.cache_dir, train_name);
    const auto fdev = preprocess(dev, store, opt, spec.cache_dir, dev_name);
    detail::require_labels(ftrain, "training");
    detail::require_labels(fdev, "evaluation");
    const FeatureMatrix X_dev = detail::stack_rows(fdev, fdev.features.size());
    const int dimension = expected_dim(tag, spec.dim);
    if (X_dev.cols() != dimension) fail(Errc::DimensionMismatch, tag.str() + ": features have length " + std::to_string(X_dev.cols()));

    for (int n : spec.train_sizes) {
      const auto t0 = clock::now();
      const FeatureMatrix X = detail::stack_rows(ftrain, static_cast<std::size_t>(n));
      const std::span<const int> y(ftrain.labels.data(), static_cast<std::size_t>(n));
      const auto model = train_model(spec.classifier, X, y, spec.cfg);
      ReportRow row;
      row.variant = tag.embedding_name() + "/amp=" + (tag.amplified ? "1" : "0");
      row.marker = tag.marker_name();
      row.dimension = dimension;
      row.train_size = n;
      row.seed = spec.cfg.seed;
      row.accuracy = evaluate(model, X_dev, fdev.labels);
      row.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace depwsd
