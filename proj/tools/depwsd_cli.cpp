// depwsd: command-line front end for the dependency-augmented WSD pipeline.
//
//   depwsd synth       --out DIR [--seed N] [--dim D]
//   depwsd preprocess  --data F --embeddings DIR --parses DIR --cache-dir DIR [--variant V] [--marker M]
//   depwsd train       --data F ... --classifier lr|mlp --out MODEL
//   depwsd evaluate    --data F ... --model MODEL
//   depwsd experiment  --config FILE | --data F --dev F ... [--preset table5] [--out DIR]
//   depwsd report      --in REPORT.tsv [--format markdown|tsv] [--out FILE]
//
// Errors are reported on stderr as {"error": "<Code>", "message": "..."}.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "depwsd/depwsd.hpp"

namespace fs = std::filesystem;
using namespace depwsd;

namespace {

struct CommonFlags {
  std::optional<std::string> config;
  std::vector<std::string> assignments;
  std::map<std::string, std::optional<std::string>> flags;  // setting key -> value

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, flags[key], help);
  }

  Settings resolve() const {
    Settings s = config ? Settings::from_ini_file(*config) : Settings{};
    for (const auto& [key, value] : flags)
      if (value) s.set(key, *value);
    for (const auto& a : assignments) s.set_assignment(a);
    return s;
  }
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "INI settings file; flags override its values")->check(CLI::ExistingFile);
  app->add_option("--set", f.assignments, "Override any setting: section.key=value (repeatable)");
  f.add(app, "--data", "data.train", "Dataset (JSON lines)");
  f.add(app, "--embeddings", "data.embeddings", "Directory of WPE-v1 embedding files");
  f.add(app, "--parses", "data.parses", "Directory of CoNLL-U parse files");
  f.add(app, "--variant", "features.variant", "Feature variant(s): baseline, concat+sum, concat+average, head_only, elementwise+sum");
  f.add(app, "--marker", "features.marker", "Boundary marker(s): sep, none, scalar9999");
  f.add(app, "--classifier", "train.classifier", "lr or mlp");
  f.add(app, "--seed", "train.seed", "Random seed");
  f.add(app, "--dim", "features.dim", "Embedding dimension");
  f.add(app, "--cache-dir", "data.cache_dir", "Feature cache directory");
  f.add(app, "--out", "data.out", "Output path");
}

ArtifactStore store_from(const Settings& s) { return ArtifactStore(s.require("data.embeddings"), s.require("data.parses")); }

std::vector<VariantTag> variants_from(const Settings& s) {
  auto v = s.list("features.variant");
  if (v.empty()) v = {"concat+sum"};
  return expand_variants(v, s.list("features.marker"));
}

VariantTag single_variant(const Settings& s) {
  auto v = variants_from(s);
  if (v.size() != 1) fail(Errc::BadConfig, "this command needs exactly one variant/marker combination, got " + std::to_string(v.size()));
  return v.front();
}

int cmd_synth(const Settings& s) {
  SynthOptions opt;
  opt.seed = s.number_or<std::uint64_t>("train.seed", 0);
  opt.dim = s.number_or<int>("features.dim", 32);
  opt.train_pairs = s.number_or<int>("synth.train_pairs", opt.train_pairs);
  opt.dev_pairs = s.number_or<int>("synth.dev_pairs", opt.dev_pairs);
  opt.lemmas = s.number_or<int>("synth.lemmas", opt.lemmas);
  const fs::path out = s.require("data.out");
  const auto corpus = make_synthetic_corpus(opt);
  write_synthetic_corpus(out, corpus);

  write_file_atomic(out / "synth.ini", synthetic_settings_ini(out, opt));

  std::cout << "wrote " << corpus.train.records.size() << " training and " << corpus.dev.records.size() << " dev pairs (d="
            << opt.dim << ") to " << out.string() << "\n";
  return 0;
}

int cmd_preprocess(const Settings& s) {
  const fs::path data = s.require("data.train");
  const fs::path cache = s.require("data.cache_dir");
  const auto records = load_dataset(data, false);
  auto store = store_from(s);
  std::cout << "records\t" << records.size() << "\n";
  for (const auto& tag : variants_from(s)) {
    const auto opt = compose_options_from(s, tag);
    const auto fs_ = preprocess(records, store, opt, cache, data.stem().string());
    std::cout << tag.str() << "\tdim=" << expected_dim(tag, opt.dim) << "\trecomputed=" << fs_.recomputed << "\treused=" << fs_.reused
              << "\t" << fs_.cache_file.string() << "\n";
  }
  return 0;
}

FeatureSet features_for(const Settings& s, const fs::path& data, const VariantTag& tag) {
  const auto records = load_dataset(data);
  auto store = store_from(s);
  return preprocess(records, store, compose_options_from(s, tag), s.get_or("data.cache_dir", ""), data.stem().string());
}

int cmd_train(const Settings& s) {
  const fs::path data = s.require("data.train");
  const fs::path out = s.require("data.out");
  const auto tag = single_variant(s);
  const auto kind = parse_classifier(s.get_or("train.classifier", "mlp"));
  const auto cfg = train_config_from(s, kind);
  const auto fs_ = features_for(s, data, tag);
  std::size_t n = fs_.features.size();
  if (auto sizes = s.get("experiment.train_sizes")) {
    auto list = parse_int_list(*sizes);
    if (list.size() != 1 || list[0] <= 0 || static_cast<std::size_t>(list[0]) > n) {
      fail(Errc::InsufficientData, "train needs one training size no larger than " + std::to_string(n));
    }
    n = static_cast<std::size_t>(list[0]);
  }
  const auto X = stack_features(std::span<const FeatureVector>(fs_.features.data(), n));
  const auto model = train_model(kind, X, std::span<const int>(fs_.labels.data(), n), cfg);
  save_model(out, model);
  std::cout << classifier_name(kind) << "\t" << tag.str() << "\tdim=" << X.cols() << "\ttrain_size=" << n
            << "\ttrain_accuracy=" << evaluate(model, X, std::span<const int>(fs_.labels.data(), n)) << "\t" << out.string() << "\n";
  return 0;
}

// --data names the scored set; without it the configured dev set is used.
int cmd_evaluate(const Settings& s, const std::optional<std::string>& data_flag) {
  const fs::path data = data_flag ? *data_flag : s.has("data.dev") ? s.require("data.dev") : s.require("data.train");
  const auto model = load_model(s.require("data.model"));
  const auto tag = single_variant(s);
  const auto fs_ = features_for(s, data, tag);
  const double acc = evaluate(model, std::span<const FeatureVector>(fs_.features), fs_.labels);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", acc);
  std::cout << "accuracy\t" << buf << "\tn=" << fs_.features.size() << "\t" << tag.str() << "\n";
  return 0;
}

int cmd_experiment(const Settings& s) {
  auto spec = experiment_from(s);
  if (spec.train_sizes.empty()) spec.train_sizes = {static_cast<int>(load_dataset(spec.train_path).size())};
  const auto report = run_experiment(spec);
  for (const auto& r : report.rows) {
    std::fprintf(stderr, "%s\t%s\tN=%d\tacc=%.4f\t%.2fs\n", r.variant.c_str(), r.marker.c_str(), r.train_size, r.accuracy, r.wall_seconds);
  }
  if (auto out = s.get("data.out")) {
    const fs::path dir = *out;
    write_report(dir / "report.tsv", report, ReportFormat::Tsv);
    write_report(dir / "report.md", report, ReportFormat::Markdown);
    std::cout << "wrote " << (dir / "report.tsv").string() << " and " << (dir / "report.md").string() << "\n";
  } else {
    std::cout << emit_markdown(report);
  }
  return 0;
}

int cmd_report(const std::string& in, const Settings& s) {
  auto report = parse_tsv_report(read_file(in));
  if (auto title = s.get("experiment.title")) report.title = *title;
  const auto format = parse_report_format(s.get_or("report.format", "markdown"));
  const auto text = emit_report(report, format);
  if (auto out = s.get("data.out")) write_file_atomic(*out, text);
  else std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dependency-augmented word sense disambiguation: features, classifiers, experiments"};
  app.require_subcommand(1);

  CommonFlags f_synth, f_pre, f_train, f_eval, f_exp, f_rep;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted senses");
  add_common(synth, f_synth);
  f_synth.add(synth, "--train-pairs", "synth.train_pairs", "Training pairs (default 2000)");
  f_synth.add(synth, "--dev-pairs", "synth.dev_pairs", "Dev pairs (default 400)");
  f_synth.add(synth, "--lemmas", "synth.lemmas", "Number of ambiguous lemmas (default 8)");

  auto* pre = app.add_subcommand("preprocess", "Compose and cache feature vectors");
  add_common(pre, f_pre);

  auto* train = app.add_subcommand("train", "Train a classifier and save it");
  add_common(train, f_train);
  f_train.add(train, "--train-sizes", "experiment.train_sizes", "Use only the first N records");

  auto* eval = app.add_subcommand("evaluate", "Score a saved model on a dataset");
  add_common(eval, f_eval);
  f_eval.add(eval, "--model", "data.model", "Model file written by 'train'");

  auto* exp = app.add_subcommand("experiment", "Run an experiment matrix and write reports");
  add_common(exp, f_exp);
  f_exp.add(exp, "--dev", "data.dev", "Evaluation dataset");
  f_exp.add(exp, "--train-sizes", "experiment.train_sizes", "Training sizes, e.g. 1000,2000 or 1000:8000:500");
  f_exp.add(exp, "--preset", "experiment.preset", "table2..table8 or fig2");
  f_exp.add(exp, "--title", "experiment.title", "Report title");

  auto* rep = app.add_subcommand("report", "Re-emit a TSV report as markdown or TSV");
  std::string report_in;
  rep->add_option("--in", report_in, "TSV report")->required()->check(CLI::ExistingFile);
  add_common(rep, f_rep);
  f_rep.add(rep, "--format", "report.format", "markdown or tsv");
  f_rep.add(rep, "--title", "experiment.title", "Report title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(f_synth.resolve());
    if (pre->parsed()) return cmd_preprocess(f_pre.resolve());
    if (train->parsed()) return cmd_train(f_train.resolve());
    if (eval->parsed()) return cmd_evaluate(f_eval.resolve(), f_eval.flags["data.train"]);
    if (exp->parsed()) return cmd_experiment(f_exp.resolve());
    if (rep->parsed()) return cmd_report(report_in, f_rep.resolve());
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", std::string(errc_name(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
