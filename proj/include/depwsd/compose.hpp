#pragma once

// Feature composition. A sentence contributes [target | head | dependents],
// or a reduction of it; a pair joins two sentence vectors around an optional
// boundary marker.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "depwsd/conllu.hpp"
#include "depwsd/embedstore.hpp"
#include "depwsd/error.hpp"

namespace depwsd {

inline constexpr double kBoundaryScalar = 9999.0;
inline constexpr double kDefaultAmplification = 2.0;

enum class Aggregation { Sum, Average };
enum class FeatureKind { Concat, Baseline, HeadOnly, Elementwise };
enum class MarkerKind { Sep, None, Scalar9999 };

/// Which dependents of the target are aggregated.
enum class DependentFilter { All, NoPunct };

inline constexpr bool uses_dependents(FeatureKind k) { return k == FeatureKind::Concat || k == FeatureKind::Elementwise; }

/// Identifies one feature variant, e.g. "concat+sum/none/amp=0".
struct VariantTag {
  FeatureKind kind = FeatureKind::Concat;
  Aggregation mode = Aggregation::Sum;
  MarkerKind marker = MarkerKind::None;
  bool amplified = false;

  VariantTag normalized() const {
    auto t = *this;
    if (!uses_dependents(kind)) t.mode = Aggregation::Sum;
    return t;
  }

  bool operator==(const VariantTag& o) const {
    auto a = normalized(), b = o.normalized();
    return a.kind == b.kind && a.mode == b.mode && a.marker == b.marker && a.amplified == b.amplified;
  }

  /// Embedding part only, e.g. "concat+sum" or "baseline".
  std::string embedding_name() const {
    std::string s;
    switch (kind) {
      case FeatureKind::Concat: s = "concat"; break;
      case FeatureKind::Baseline: s = "baseline"; break;
      case FeatureKind::HeadOnly: s = "head_only"; break;
      case FeatureKind::Elementwise: s = "elementwise"; break;
    }
    if (uses_dependents(kind)) s += mode == Aggregation::Sum ? "+sum" : "+average";
    return s;
  }

  /// The sep marker is always the first sentence's separator vector.
  std::string marker_name() const {
    switch (marker) {
      case MarkerKind::Sep: return "sep@s1";
      case MarkerKind::None: return "none";
      case MarkerKind::Scalar9999: return "scalar9999";
    }
    return "none";
  }

  std::string str() const { return embedding_name() + "/" + marker_name() + "/amp=" + (amplified ? "1" : "0"); }
};

inline FeatureKind parse_feature_kind(std::string_view s, Aggregation& mode) {
  auto plus = s.find('+');
  auto base = s.substr(0, plus);
  if (plus != std::string_view::npos) {
    auto agg = s.substr(plus + 1);
    if (agg == "sum") mode = Aggregation::Sum;
    else if (agg == "average" || agg == "avg") mode = Aggregation::Average;
    else fail(Errc::BadConfig, "unknown aggregation '" + std::string(agg) + "'");
  }
  if (base == "concat") return FeatureKind::Concat;
  if (base == "baseline") return FeatureKind::Baseline;
  if (base == "head_only" || base == "head-only") return FeatureKind::HeadOnly;
  if (base == "elementwise") return FeatureKind::Elementwise;
  fail(Errc::BadConfig, "unknown feature variant '" + std::string(s) + "'");
}

inline MarkerKind parse_marker(std::string_view s) {
  if (s == "sep" || s == "sep@s1") return MarkerKind::Sep;
  if (s == "none") return MarkerKind::None;
  if (s == "scalar9999" || s == "9999" || s == "scalar") return MarkerKind::Scalar9999;
  fail(Errc::BadConfig, "unknown boundary marker '" + std::string(s) + "'");
}

/// Accepts "concat+sum", "baseline/none", or a full "concat+sum/none/amp=1".
inline VariantTag parse_variant(std::string_view s) {
  VariantTag t;
  auto parts = split(s, '/');
  t.kind = parse_feature_kind(parts[0], t.mode);
  if (parts.size() > 1) t.marker = parse_marker(parts[1]);
  if (parts.size() > 2) {
    if (parts[2] == "amp=1") t.amplified = true;
    else if (parts[2] != "amp=0") fail(Errc::BadConfig, "bad amplification field '" + std::string(parts[2]) + "'");
  }
  if (parts.size() > 3) fail(Errc::BadConfig, "bad variant tag '" + std::string(s) + "'");
  return t.normalized();
}

inline int sentence_dim(FeatureKind kind, int d) {
  switch (kind) {
    case FeatureKind::Concat: return 3 * d;
    case FeatureKind::Baseline: return d;
    case FeatureKind::HeadOnly: return 2 * d;
    case FeatureKind::Elementwise: return d;
  }
  return 0;
}

inline int marker_dim(MarkerKind marker, int d) {
  switch (marker) {
    case MarkerKind::Sep: return d;
    case MarkerKind::None: return 0;
    case MarkerKind::Scalar9999: return 1;
  }
  return 0;
}

/// Length of a composed pair vector for embedding dimension d.
inline int expected_dim(const VariantTag& tag, int d) { return 2 * sentence_dim(tag.kind, d) + marker_dim(tag.marker, d); }

struct SentenceFeature {
  std::vector<double> target;
  std::vector<double> head;  // zero when the target is the root
  std::vector<double> dep;   // zero when there are no dependents
  int d = 0;
  int dep_count = 0;
  Aggregation mode = Aggregation::Sum;
};

struct FeatureVector {
  std::vector<double> values;
  VariantTag variant;
  int expected_dim = 0;
};

inline std::vector<double> word_embedding(const SentenceEmbeddings& emb, const WordAlignment& align, int token) {
  auto v = merge_subwords(emb.pieces, align.for_token(token));
  if (static_cast<int>(v.size()) != emb.dim) {
    fail(Errc::DimensionMismatch, "word vector has dimension " + std::to_string(v.size()) + ", expected " + std::to_string(emb.dim));
  }
  return v;
}

namespace detail {

inline bool is_punct(const ConlluToken& t) { return t.deprel == "punct" || t.upos.value_or("") == "PUNCT"; }

inline void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
}

}  // namespace detail

/// Target may span several parser tokens (ascending, distinct). The target
/// slot is their mean word vector; the head slot uses the first span token
/// whose head lies outside the span; dependents are every token outside the
/// span attached to a span token.
inline SentenceFeature sentence_feature(const SentenceEmbeddings& emb, const WordAlignment& align, const DependencySentence& tree,
                                        std::span<const int> targets, Aggregation mode,
                                        DependentFilter filter = DependentFilter::All) {
  if (targets.empty()) fail(Errc::IndexOutOfRange, "empty target token set");
  if (static_cast<int>(align.ranges.size()) != tree.size()) {
    fail(Errc::DimensionMismatch, "alignment covers " + std::to_string(align.ranges.size()) + " tokens, parse has " + std::to_string(tree.size()));
  }
  const auto in_span = [&](int i) { return std::find(targets.begin(), targets.end(), i) != targets.end(); };
  const int d = emb.dim;
  SentenceFeature f;
  f.d = d;
  f.mode = mode;
  f.target.assign(static_cast<std::size_t>(d), 0.0);
  f.head.assign(static_cast<std::size_t>(d), 0.0);
  f.dep.assign(static_cast<std::size_t>(d), 0.0);

  for (int t : targets) {
    check_index(tree, t);
    detail::add_into(f.target, word_embedding(emb, align, t));
  }
  if (targets.size() > 1)
    for (auto& x : f.target) x /= static_cast<double>(targets.size());

  for (int t : targets) {
    auto h = head_of(tree, t);
    if (h && !in_span(*h)) {
      f.head = word_embedding(emb, align, *h);
      break;
    }
  }

  std::vector<int> deps;
  for (int t : targets)
    for (int j : dependents_of(tree, t))
      if (!in_span(j) && !(filter == DependentFilter::NoPunct && detail::is_punct(tree.token(j)))) deps.push_back(j);
  std::sort(deps.begin(), deps.end());
  for (int j : deps) detail::add_into(f.dep, word_embedding(emb, align, j));
  f.dep_count = static_cast<int>(deps.size());
  if (mode == Aggregation::Average && f.dep_count > 0)
    for (auto& x : f.dep) x /= static_cast<double>(f.dep_count);
  return f;
}

inline SentenceFeature sentence_feature(const SentenceEmbeddings& emb, const WordAlignment& align, const DependencySentence& tree,
                                        int target, Aggregation mode, DependentFilter filter = DependentFilter::All) {
  const int t[] = {target};
  return sentence_feature(emb, align, tree, std::span<const int>(t), mode, filter);
}

inline std::vector<double> baseline_feature(const SentenceEmbeddings& emb, const WordAlignment& align, int target) {
  return word_embedding(emb, align, target);
}

inline SentenceFeature amplify_target(SentenceFeature f, double factor = kDefaultAmplification) {
  for (auto& x : f.target) x *= factor;
  return f;
}

inline std::vector<double> reduce_head_only(const SentenceFeature& f) {
  std::vector<double> out(f.target);
  out.insert(out.end(), f.head.begin(), f.head.end());
  return out;
}

inline std::vector<double> reduce_elementwise(const SentenceFeature& f) {
  std::vector<double> out(f.target.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f.target[k] * f.head[k] * f.dep[k];
  return out;
}

inline std::vector<double> concat_slots(const SentenceFeature& f) {
  std::vector<double> out;
  out.reserve(f.target.size() * 3);
  out.insert(out.end(), f.target.begin(), f.target.end());
  out.insert(out.end(), f.head.begin(), f.head.end());
  out.insert(out.end(), f.dep.begin(), f.dep.end());
  return out;
}

/// Per-sentence vector for the given kind.
inline std::vector<double> sentence_vector(const SentenceFeature& f, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Concat: return concat_slots(f);
    case FeatureKind::Baseline: return f.target;
    case FeatureKind::HeadOnly: return reduce_head_only(f);
    case FeatureKind::Elementwise: return reduce_elementwise(f);
  }
  return {};
}

struct BoundaryMarker {
  MarkerKind kind = MarkerKind::None;
  std::vector<double> sep;  // used only for MarkerKind::Sep
};

inline std::vector<double> pair_feature(const std::vector<double>& f1, const std::vector<double>& f2, const BoundaryMarker& marker) {
  if (f1.size() != f2.size()) {
    fail(Errc::DimensionMismatch, "sentence vectors of length " + std::to_string(f1.size()) + " and " + std::to_string(f2.size()));
  }
  std::vector<double> out;
  out.reserve(2 * f1.size() + marker.sep.size() + 1);
  out.insert(out.end(), f1.begin(), f1.end());
  switch (marker.kind) {
    case MarkerKind::Sep: out.insert(out.end(), marker.sep.begin(), marker.sep.end()); break;
    case MarkerKind::Scalar9999: out.push_back(kBoundaryScalar); break;
    case MarkerKind::None: break;
  }
  out.insert(out.end(), f2.begin(), f2.end());
  return out;
}

/// Full pair composition for a variant. `sep` is the first sentence's
/// separator vector (ignored unless the marker is Sep).
inline FeatureVector compose_pair(const SentenceFeature& s1, const SentenceFeature& s2, const VariantTag& tag,
                                  std::span<const float> sep, double amplification = kDefaultAmplification) {
  if (s1.d != s2.d) fail(Errc::DimensionMismatch, "sentences have dimensions " + std::to_string(s1.d) + " and " + std::to_string(s2.d));
  const auto prep = [&](const SentenceFeature& s) {
    return sentence_vector(tag.amplified ? amplify_target(s, amplification) : s, tag.kind);
  };
  BoundaryMarker marker{tag.marker, {}};
  if (tag.marker == MarkerKind::Sep) {
    if (static_cast<int>(sep.size()) != s1.d) fail(Errc::DimensionMismatch, "separator vector has dimension " + std::to_string(sep.size()));
    marker.sep.assign(sep.begin(), sep.end());
  }
  FeatureVector fv{pair_feature(prep(s1), prep(s2), marker), tag.normalized(), expected_dim(tag, s1.d)};
  if (static_cast<int>(fv.values.size()) != fv.expected_dim) {
    fail(Errc::DimensionMismatch, tag.str() + " produced " + std::to_string(fv.values.size()) + " values, expected " + std::to_string(fv.expected_dim));
  }
  return fv;
}

}  // namespace depwsd
