// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "depwsd/depwsd.hpp"

using namespace depwsd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= budget_seconds) {
    out.ok = false;
    out.detail << " [over time budget of " << budget_seconds << " s]";
  }
  if (!out.ok) ++failures;
  std::printf("[%s] %s (%.3f s)%s\n", out.ok ? "PASS" : "FAIL", name.c_str(), secs, out.detail.str().c_str());
  std::fflush(stdout);
}

// Per-sentence features with a target that has exactly k dependents.
SentenceFeature feature_with_dependents(int k, int d, std::uint64_t seed, Aggregation mode) {
  DependencySentence tree;
  std::vector<std::string> forms = {"root", "target"};
  for (int i = 0; i < k; ++i) forms.push_back("w" + std::to_string(i));
  for (std::size_t i = 0; i < forms.size(); ++i) {
    tree.tokens.push_back(ConlluToken{static_cast<int>(i) + 1, forms[i], std::nullopt, std::nullopt, i == 0 ? 0 : i == 1 ? 1 : 2, "dep"});
  }
  auto emb = synthetic_embeddings(forms, "", seed, d);
  return sentence_feature(emb, align_words(forms, emb.pieces), tree, 2, mode);
}

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
    total += mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx)) - z[y[static_cast<std::size_t>(i)]];
  }
  return total / static_cast<double>(X.rows());
}

// Exact minimum of the regularised objective over the grid w1, w2, b in
// {-10, -9.99, ..., 10}. The penalty alone bounds the objective from below,
// which prunes almost every (w1, w2) pair; along b the sampled objective is
// convex, so its grid minimum is found by bisection on forward differences.
double grid_minimum(const FeatureMatrix& X, const std::vector<int>& y, double lambda) {
  const auto f = [&](double w1, double w2, double b) {
    double loss = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double z = w1 * X(i, 0) + w2 * X(i, 1) + b;
      const double s = y[static_cast<std::size_t>(i)] == 1 ? -z : z;
      loss += std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
    }
    return loss / static_cast<double>(X.rows()) + 0.5 * lambda * (w1 * w1 + w2 * w2);
  };
  const auto g = [](int i) { return i * 0.01; };
  double best = f(0, 0, 0);
  for (int i1 = -1000; i1 <= 1000; ++i1) {
    for (int i2 = -1000; i2 <= 1000; ++i2) {
      const double w1 = g(i1), w2 = g(i2);
      if (0.5 * lambda * (w1 * w1 + w2 * w2) >= best) continue;
      int lo = -1000, hi = 1000;
      while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (f(w1, w2, g(mid + 1)) < f(w1, w2, g(mid))) lo = mid + 1;
        else hi = mid;
      }
      best = std::min(best, f(w1, w2, g(lo)));
    }
  }
  return best;
}

struct RunResult {
  std::string tsv, markdown;
  double accuracy = 0;
  double seconds = 0;
};

// generate -> preprocess -> train -> report, entirely from files on disk.
RunResult synthetic_pipeline(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(dir);
  SynthOptions opt;  // 2000 train / 400 dev pairs at d = 32
  write_synthetic_corpus(dir, make_synthetic_corpus(opt));
  write_file_atomic(dir / "synth.ini", synthetic_settings_ini(dir, opt));
  auto settings = Settings::from_ini_file(dir / "synth.ini");
  settings.set("experiment.train_sizes", std::to_string(opt.train_pairs));
  const auto report = run_experiment(experiment_from(settings));
  write_report(dir / "report.tsv", report, ReportFormat::Tsv);
  write_report(dir / "report.md", report, ReportFormat::Markdown);
  RunResult r;
  r.tsv = read_file(dir / "report.tsv");
  r.markdown = read_file(dir / "report.md");
  r.accuracy = report.rows.at(0).accuracy;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "depwsd_acceptance";
  fs::create_directories(work);

  criterion("dimension table at d=768 matches published feature sizes", 1.0, [](Outcome& o) {
    const std::pair<const char*, int> table[] = {
        {"concat+sum/sep", 5376}, {"concat+sum/none", 4608},  {"baseline/sep", 2304},        {"baseline/none", 1536},
        {"baseline/scalar9999", 1537}, {"head_only/none", 3072}, {"elementwise+sum/none", 1536},
    };
    DependencySentence tree;
    tree.tokens = {ConlluToken{1, "eats", std::nullopt, std::nullopt, 0, "root"}, ConlluToken{2, "mouse", std::nullopt, std::nullopt, 1, "nsubj"},
                   ConlluToken{3, "small", std::nullopt, std::nullopt, 2, "amod"}};
    auto emb = synthetic_embeddings(tree.forms(), "", 1, 768);
    const auto align = align_words(tree.forms(), emb.pieces);
    for (const auto& [name, size] : table) {
      const auto tag = parse_variant(name);
      const auto s = sentence_feature(emb, align, tree, 2, tag.mode);
      const auto fv = compose_pair(s, s, tag, emb.sep_vector);
      o.expect(static_cast<int>(fv.values.size()) == size, std::string(name) + " -> " + std::to_string(fv.values.size()));
      o.expect(expected_dim(tag, 768) == size, std::string(name) + " table entry");
    }
  });

  criterion("MLP analytic gradient matches central differences (H=16, 8 samples)", 5.0, [](Outcome& o) {
    std::mt19937_64 rng(2024);
    const int h = 16, n = 8;
    auto m = mlp_init(h, h, rng);
    m.b1.setConstant(0.02);
    std::normal_distribution<double> g;
    FeatureMatrix X(n, h);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < h; ++j) X(i, j) = g(rng);
      y[static_cast<std::size_t>(i)] = (i * 7 + 3) % 2;
    }
    const auto [loss, grad] = mlp_loss_and_gradient(m, X, y);
    o.expect(std::abs(loss - naive_mlp_loss(m, X, y)) < 1e-12, "loss disagrees with loop reference");
    double worst = 0;
    const double step = 1e-5;
    const auto check = [&](auto& param, const auto& analytic) {
      for (Eigen::Index k = 0; k < param.size(); ++k) {
        const double saved = param.data()[k];
        param.data()[k] = saved + step;
        const double up = naive_mlp_loss(m, X, y);
        param.data()[k] = saved - step;
        const double down = naive_mlp_loss(m, X, y);
        param.data()[k] = saved;
        const double a = analytic.data()[k], num = (up - down) / (2 * step);
        worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-7}));
      }
    };
    check(m.W1, grad.W1);
    check(m.b1, grad.b1);
    check(m.W2, grad.W2);
    check(m.b2, grad.b2);
    o.detail << " max relative error " << worst;
    o.expect(worst < 1e-5, "relative error too large");
  });

  criterion("logistic regression reaches the brute-force grid optimum (20 samples, 2 features)", 30.0, [](Outcome& o) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    FeatureMatrix X(20, 2);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
      X(i, 0) = g(rng);
      X(i, 1) = g(rng);
      y[static_cast<std::size_t>(i)] = 0.8 * X(i, 0) - 0.5 * X(i, 1) + 0.3 + 0.7 * g(rng) > 0 ? 1 : 0;
    }
    auto cfg = TrainConfig::logistic_defaults();
    const auto m = lr_train(X, y, cfg);
    const double trained = lr_objective(X, y, m.w, m.b, cfg.l2);
    const double grid = grid_minimum(X, y, cfg.l2);
    o.detail << " trained " << trained << " grid " << grid;
    o.expect(trained <= grid + 1e-4, "trained loss above grid minimum");
  });

  criterion("sum slot equals k times average slot for k in {0,1,2,5}", 1.0, [](Outcome& o) {
    for (int k : {0, 1, 2, 5}) {
      for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto s = feature_with_dependents(k, 64, seed * 131 + static_cast<std::uint64_t>(k), Aggregation::Sum);
        const auto a = feature_with_dependents(k, 64, seed * 131 + static_cast<std::uint64_t>(k), Aggregation::Average);
        o.expect(s.dep_count == k, "dependent count");
        if (k == 1) o.expect(s.dep == a.dep, "k=1 not bit-equal");
        for (std::size_t j = 0; j < s.dep.size(); ++j) {
          if (k == 0) {
            o.expect(s.dep[j] == 0.0 && a.dep[j] == 0.0, "k=0 not zero");
          } else {
            const double expect = k * a.dep[j];
            o.expect(std::abs(s.dep[j] - expect) <= 1e-12 * std::abs(expect), "k=" + std::to_string(k) + " relative error");
          }
        }
      }
    }
  });

  criterion("WPE-v1, CoNLL-U and model files round-trip bit-exactly", 10.0, [&](Outcome& o) {
    const fs::path fixtures(DEPWSD_FIXTURES);
    const auto wpe = read_file(fixtures / "two_pieces.wpe");
    o.expect(write_embedding_text(read_embedding_text(wpe)) == wpe, "wpe fixture");

    const auto golden = read_file(fixtures / "example_parses.expected.conllu");
    o.expect(serialize_conllu(parse_conllu(read_file(fixtures / "example_parses.conllu"))) == golden, "conllu fixture normalisation");
    o.expect(serialize_conllu(parse_conllu(golden)) == golden, "conllu golden");

    SynthOptions so;
    so.train_pairs = 200;
    so.dev_pairs = 20;
    so.dim = 48;
    so.seed = 5;
    const auto dir = work / "roundtrip";
    write_synthetic_corpus(dir, make_synthetic_corpus(so));
    const auto emb_text = read_file(dir / "embeddings" / "train.wpe");
    const auto embs = read_embedding_text(emb_text);
    o.expect(write_embedding_text(embs) == emb_text, "synthetic wpe bytes");
    for (const auto& e : embs)
      for (std::size_t p = 0; p < e.pieces.size(); ++p) {
        const auto& v = e.pieces[p].vector;
        const auto again = read_embedding_text(write_embedding_text({e}))[0].pieces[p].vector;
        o.expect(std::memcmp(v.data(), again.data(), v.size() * sizeof(float)) == 0, "float bits");
      }
    const auto parse_text = read_file(dir / "parses" / "train.conllu");
    o.expect(serialize_conllu(parse_conllu(parse_text)) == parse_text, "synthetic conllu bytes");

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    FeatureMatrix X(60, 6);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 6; ++j) X(i, j) = g(rng);
      y[static_cast<std::size_t>(i)] = X(i, 0) + X(i, 3) > 0;
    }
    TrainConfig mc;
    mc.max_epochs = 10;
    const Model models[] = {Model{lr_train(X, y, TrainConfig::logistic_defaults())}, Model{mlp_train(X, y, mc)}};
    int idx = 0;
    for (const auto& model : models) {
      const auto path = work / ("model" + std::to_string(idx++) + ".txt");
      save_model(path, model);
      const auto back = load_model(path);
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const std::vector<double> x(X.row(i).data(), X.row(i).data() + X.cols());
        const double a = predict_probability(model, x), b = predict_probability(back, x);
        o.expect(std::memcmp(&a, &b, sizeof a) == 0, "model prediction bits");
      }
    }
  });

  RunResult first, second;
  criterion("synthetic end-to-end run: 2000/400 pairs, d=32, MLP on concat >= 90% dev accuracy in < 60 s", 60.0, [&](Outcome& o) {
    first = synthetic_pipeline(work / "synthetic_a");
    o.detail << " dev accuracy " << first.accuracy;
    o.expect(first.accuracy >= 0.90, "accuracy below 90%");
  });

  criterion("two full runs with identical inputs emit byte-identical reports", 120.0, [&](Outcome& o) {
    second = synthetic_pipeline(work / "synthetic_b");
    o.expect(!first.tsv.empty() && first.tsv == second.tsv, "tsv differs");
    o.expect(!first.markdown.empty() && first.markdown == second.markdown, "markdown differs");
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
