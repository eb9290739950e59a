#pragma once

// Turns pair records into cached feature vectors.
//
// Embeddings and parses are looked up by sentence id ("<record>.s1",
// "<record>.s2"). A directory may hold one file per record
// (<record>.wpe / <record>.conllu) or any number of combined files; the
// per-record file is tried first. CoNLL-U sentences are identified by their
// "# sent_id = ..." comment.
//
// The cache file holds one entry per record together with a content key
// covering the record, both sentences' embeddings and parses, the variant
// and every composition option; entries with a matching key are reused.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "depwsd/compose.hpp"
#include "depwsd/conllu.hpp"
#include "depwsd/dataset.hpp"
#include "depwsd/embedstore.hpp"
#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

namespace fs = std::filesystem;

class ArtifactStore {
 public:
  ArtifactStore(fs::path embeddings_dir, fs::path parses_dir)
      : embeddings_dir_(std::move(embeddings_dir)), parses_dir_(std::move(parses_dir)) {}

  const SentenceEmbeddings& embeddings(const std::string& record_id, const std::string& sentence_id) {
    if (auto* e = find(embeddings_, sentence_id)) return *e;
    const auto per_record = embeddings_dir_ / (record_id + ".wpe");
    if (fs::exists(per_record)) {
      for (auto& s : read_embedding_file(per_record)) embeddings_.emplace(s.id, std::move(s));
    } else if (!embeddings_indexed_) {
      index_all(embeddings_dir_, ".wpe", [&](const fs::path& p) {
        for (auto& s : read_embedding_file(p)) embeddings_.emplace(s.id, std::move(s));
      });
      embeddings_indexed_ = true;
    }
    if (auto* e = find(embeddings_, sentence_id)) return *e;
    fail(Errc::MissingArtifact, "no embeddings for sentence '" + sentence_id + "' under " + embeddings_dir_.string());
  }

  const DependencySentence& parse(const std::string& record_id, const std::string& sentence_id) {
    if (auto* s = find(parses_, sentence_id)) return *s;
    const auto per_record = parses_dir_ / (record_id + ".conllu");
    if (fs::exists(per_record)) {
      add_parses(per_record);
    } else if (!parses_indexed_) {
      index_all(parses_dir_, ".conllu", [&](const fs::path& p) { add_parses(p); });
      parses_indexed_ = true;
    }
    if (auto* s = find(parses_, sentence_id)) return *s;
    fail(Errc::MissingArtifact, "no parse for sentence '" + sentence_id + "' under " + parses_dir_.string());
  }

 private:
  template <class Map>
  static const typename Map::mapped_type* find(const Map& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  }

  template <class Fn>
  static void index_all(const fs::path& dir, const std::string& ext, Fn&& load) {
    if (!fs::is_directory(dir)) fail(Errc::MissingArtifact, "directory " + dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load(f);
  }

  void add_parses(const fs::path& path) {
    std::vector<DependencySentence> sentences;
    try {
      sentences = parse_conllu(read_file(path));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
    for (auto& s : sentences) {
      auto id = s.sent_id();
      if (id.empty()) fail(Errc::MissingArtifact, path.string() + ": sentence without '# sent_id' comment");
      parses_.emplace(std::move(id), std::move(s));
    }
  }

  fs::path embeddings_dir_;
  fs::path parses_dir_;
  std::map<std::string, SentenceEmbeddings> embeddings_;
  std::map<std::string, DependencySentence> parses_;
  bool embeddings_indexed_ = false;
  bool parses_indexed_ = false;
};

struct ComposeOptions {
  VariantTag variant;
  int dim = kDefaultDim;
  double amplification = kDefaultAmplification;
  DependentFilter dependents = DependentFilter::All;
};

namespace detail {

inline SentenceFeature sentence_side(const SentenceEmbeddings& emb, const DependencySentence& tree, const std::string& text,
                                     int start, int end, const ComposeOptions& opt) {
  const auto forms = tree.forms();
  const auto align = align_words(forms, emb.pieces);
  const auto targets = tokens_in_span(text, forms, start, end);
  if (targets.empty()) {
    fail(Errc::TargetNotInParse, "target span [" + std::to_string(start) + ", " + std::to_string(end) + ") covers no parser token");
  }
  return sentence_feature(emb, align, tree, std::span<const int>(targets), opt.variant.mode, opt.dependents);
}

}  // namespace detail

/// Composes the feature vector of one record from its artifacts.
inline FeatureVector record_feature(const PairRecord& r, const SentenceEmbeddings& e1, const DependencySentence& t1,
                                    const SentenceEmbeddings& e2, const DependencySentence& t2, const ComposeOptions& opt) {
  try {
    for (const auto* e : {&e1, &e2}) {
      if (e->dim != opt.dim) fail(Errc::DimensionMismatch, "sentence '" + e->id + "' has dim " + std::to_string(e->dim) + ", expected " + std::to_string(opt.dim));
    }
    auto s1 = detail::sentence_side(e1, t1, r.sentence1, r.start1, r.end1, opt);
    auto s2 = detail::sentence_side(e2, t2, r.sentence2, r.start2, r.end2, opt);
    return compose_pair(s1, s2, opt.variant, e1.sep_vector, opt.amplification);
  } catch (const Error& e) {
    throw Error(e.code(), "record '" + r.id + "': " + e.what());
  }
}

inline std::uint64_t record_content_key(const PairRecord& r, const SentenceEmbeddings& e1, const DependencySentence& t1,
                                        const SentenceEmbeddings& e2, const DependencySentence& t2, const ComposeOptions& opt) {
  Fnv1a64 h;
  h.field("depwsd-features v1");
  h.field(record_to_json(r).dump());
  h.field(write_embedding_text({e1, e2}));
  h.field(serialize_conllu({t1, t2}));
  h.field(opt.variant.str());
  h.field(hex_double(opt.amplification));
  h.update_u64(static_cast<std::uint64_t>(opt.dim));
  h.update_u64(opt.dependents == DependentFilter::All ? 0 : 1);
  return h.digest();
}

struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<FeatureVector> features;
  std::vector<int> labels;  // -1 for unlabelled records
  int recomputed = 0;
  int reused = 0;
  fs::path cache_file;
};

namespace detail {

struct CacheEntry {
  std::uint64_t key = 0;
  std::vector<double> values;
};

inline constexpr std::string_view kCacheMagic = "depwsd-feature-cache v1\n";

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

inline std::uint64_t get_u64(std::string_view in, std::size_t& off) {
  if (off + 8 > in.size()) fail(Errc::IoError, "truncated feature cache");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  off += 8;
  return v;
}

// Little-endian binary: magic, count, then per entry id, key, length, values.
inline std::string encode_cache(const FeatureSet& fs_, const std::vector<std::uint64_t>& keys) {
  std::string out(kCacheMagic);
  put_u64(out, fs_.ids.size());
  for (std::size_t i = 0; i < fs_.ids.size(); ++i) {
    put_u64(out, fs_.ids[i].size());
    out += fs_.ids[i];
    put_u64(out, keys[i]);
    const auto& v = fs_.features[i].values;
    put_u64(out, v.size());
    for (double x : v) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

inline std::map<std::string, CacheEntry> decode_cache(std::string_view in) {
  std::map<std::string, CacheEntry> entries;
  if (!in.starts_with(kCacheMagic)) return entries;
  std::size_t off = kCacheMagic.size();
  const auto count = get_u64(in, off);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id_len = get_u64(in, off);
    if (off + id_len > in.size()) fail(Errc::IoError, "truncated feature cache");
    std::string id(in.substr(off, id_len));
    off += id_len;
    CacheEntry e;
    e.key = get_u64(in, off);
    const auto n = get_u64(in, off);
    if (n > (in.size() - off) / 8) fail(Errc::IoError, "truncated feature cache");
    e.values.resize(n);
    for (auto& x : e.values) x = std::bit_cast<double>(get_u64(in, off));
    entries.emplace(std::move(id), std::move(e));
  }
  return entries;
}

inline std::string sanitize(std::string s) {
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

}  // namespace detail

inline fs::path cache_path(const fs::path& cache_dir, const std::string& dataset_name, const ComposeOptions& opt) {
  return cache_dir / (detail::sanitize(dataset_name) + "__" + detail::sanitize(opt.variant.str()) + "__d" + std::to_string(opt.dim) + ".fvc");
}

/// One feature vector per record, in record order. With an empty
/// `cache_dir` nothing is read or written.
inline FeatureSet preprocess(const std::vector<PairRecord>& records, ArtifactStore& store, const ComposeOptions& opt,
                             const fs::path& cache_dir = {}, const std::string& dataset_name = "dataset") {
  FeatureSet out;
  std::map<std::string, detail::CacheEntry> cached;
  if (!cache_dir.empty()) {
    out.cache_file = cache_path(cache_dir, dataset_name, opt);
    if (fs::exists(out.cache_file)) cached = detail::decode_cache(read_file(out.cache_file));
  }
  const int expected = expected_dim(opt.variant, opt.dim);
  std::vector<std::uint64_t> keys;
  for (const auto& r : records) {
    const auto id1 = r.id + ".s1", id2 = r.id + ".s2";
    const auto& e1 = store.embeddings(r.id, id1);
    const auto& e2 = store.embeddings(r.id, id2);
    const auto& t1 = store.parse(r.id, id1);
    const auto& t2 = store.parse(r.id, id2);
    const auto key = record_content_key(r, e1, t1, e2, t2, opt);
    auto hit = cached.find(r.id);
    if (hit != cached.end() && hit->second.key == key && static_cast<int>(hit->second.values.size()) == expected) {
      out.features.push_back(FeatureVector{std::move(hit->second.values), opt.variant.normalized(), expected});
      ++out.reused;
    } else {
      out.features.push_back(record_feature(r, e1, t1, e2, t2, opt));
      ++out.recomputed;
    }
    out.ids.push_back(r.id);
    out.labels.push_back(r.label.value_or(-1));
    keys.push_back(key);
  }
  if (!cache_dir.empty() && out.recomputed > 0) write_file_atomic(out.cache_file, detail::encode_cache(out, keys));
  return out;
}

}  // namespace depwsd
