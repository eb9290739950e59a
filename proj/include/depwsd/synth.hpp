#pragma once

// Synthetic sentence-pair corpus with a planted sense structure.
//
// Each pair shares one ambiguous lemma. Every sentence picks sense A or B for
// it; the target's embeddings use the sense tag "<lemma>#<sense>" and its
// neighbours are drawn from sense-specific vocabularies. The label is T
// exactly when both senses agree. Long words are split into wordpieces so
// alignment and subword merging are exercised.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "depwsd/conllu.hpp"
#include "depwsd/dataset.hpp"
#include "depwsd/embedstore.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

struct SynthOptions {
  int train_pairs = 2000;
  int dev_pairs = 400;
  int dim = 32;
  std::uint64_t seed = 0;
  int lemmas = 8;
};

struct SynthSplit {
  std::vector<PairRecord> records;
  std::vector<SentenceEmbeddings> embeddings;
  std::vector<DependencySentence> parses;
};

struct SynthCorpus {
  SynthSplit train;
  SynthSplit dev;
};

namespace detail {

inline const std::array<const char*, 16>& synth_lemmas() {
  static const std::array<const char*, 16> lemmas = {"mouse", "bank",  "bark",   "pitch", "spring", "crane", "bat",   "seal",
                                                     "match", "palm",  "plant",  "scale", "letter", "organ", "bolt", "ring"};
  return lemmas;
}

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : rng_(Fnv1a64().field("depwsd-synth").update_u64(seed).digest()) {}
  std::uint64_t below(std::uint64_t n) { return rng_.next() % n; }
  bool coin() { return below(2) == 1; }

 private:
  CounterRng rng_;
};

// Pronounceable pseudo-word, a pure function of (salt, i).
inline std::string pseudo_word(std::string_view salt, int i) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "br", "st", "tr"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  CounterRng rng(Fnv1a64().field(salt).update_u64(static_cast<std::uint64_t>(i)).digest());
  const int syllables = 2 + static_cast<int>(rng.next() % 3);
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += kOnsets[rng.next() % std::size(kOnsets)];
    w += kVowels[rng.next() % std::size(kVowels)];
  }
  return w;
}

// Words longer than six characters become "<first4>" + "##<rest>".
inline std::vector<std::string> wordpieces_of(const std::string& word) {
  if (word.size() <= 6) return {word};
  return {word.substr(0, 4), "##" + word.substr(4)};
}

struct SynthSentence {
  std::vector<std::string> forms;
  std::vector<int> heads;
  std::vector<std::string> deprels;
  int target = 0;  // 1-based
};

inline std::string vocab_word(const std::string& lemma, char sense, const char* role, int i) {
  return pseudo_word(lemma + "#" + sense + "#" + role, i);
}

// Layout (optional parts in brackets):
//   object target:  the SUBJ VERB the [ADJ] TARGET [of MOD] .
//   subject target: the [ADJ] TARGET [of MOD] VERB the OBJ .
inline SynthSentence make_sentence(SynthRng& rng, const std::string& lemma, char sense) {
  SynthSentence s;
  const auto add = [&](std::string form, int head, std::string rel) {
    s.forms.push_back(std::move(form));
    s.heads.push_back(head);
    s.deprels.push_back(std::move(rel));
    return static_cast<int>(s.forms.size());
  };
  const bool target_is_object = rng.coin();
  const bool with_adj = rng.coin();
  const bool with_mod = rng.coin();
  const auto verb = pseudo_word("verb", static_cast<int>(rng.below(12)));
  const auto other = vocab_word(lemma, sense, "noun", static_cast<int>(rng.below(6)));
  const auto adj = vocab_word(lemma, sense, "adj", static_cast<int>(rng.below(4)));
  const auto mod = vocab_word(lemma, sense, "mod", static_cast<int>(rng.below(6)));

  // Heads pointing forward are patched once the position is known.
  if (target_is_object) {
    add("the", 2, "det");
    add(other, 3, "nsubj");
    const int v = add(verb, 0, "root");
    const int det = add("the", 0, "det");
    const int adj_i = with_adj ? add(adj, 0, "amod") : 0;
    s.target = add(lemma, v, "obj");
    s.heads[static_cast<std::size_t>(det - 1)] = s.target;
    if (adj_i) s.heads[static_cast<std::size_t>(adj_i - 1)] = s.target;
    if (with_mod) {
      add("of", static_cast<int>(s.forms.size()) + 2, "case");
      add(mod, s.target, "nmod");
    }
    add(".", v, "punct");
  } else {
    const int det = add("the", 0, "det");
    const int adj_i = with_adj ? add(adj, 0, "amod") : 0;
    s.target = add(lemma, 0, "nsubj");
    s.heads[static_cast<std::size_t>(det - 1)] = s.target;
    if (adj_i) s.heads[static_cast<std::size_t>(adj_i - 1)] = s.target;
    if (with_mod) {
      add("of", static_cast<int>(s.forms.size()) + 2, "case");
      add(mod, s.target, "nmod");
    }
    const int v = add(verb, 0, "root");
    s.heads[static_cast<std::size_t>(s.target - 1)] = v;
    const int det2 = add("the", 0, "det");
    const int obj = add(other, v, "obj");
    s.heads[static_cast<std::size_t>(det2 - 1)] = obj;
    add(".", v, "punct");
  }
  return s;
}

// Tokens joined by single spaces; the final period attaches to the last word.
inline std::string surface_text(const SynthSentence& s, int& target_start, int& target_end) {
  std::string text;
  for (std::size_t i = 0; i < s.forms.size(); ++i) {
    if (i > 0 && s.forms[i] != ".") text += ' ';
    if (static_cast<int>(i) + 1 == s.target) target_start = codepoint_length(text);
    text += s.forms[i];
    if (static_cast<int>(i) + 1 == s.target) target_end = codepoint_length(text);
  }
  return text;
}

inline void emit_sentence(SynthSplit& split, const SynthSentence& s, const std::string& sentence_id, const std::string& lemma, char sense,
                          const SynthOptions& opt) {
  // Only the target word carries the sense tag; neighbours are sense-specific
  // through vocabulary choice.
  SentenceEmbeddings emb;
  emb.id = sentence_id;
  emb.dim = opt.dim;
  const std::string tag = lemma + "#" + sense;
  for (std::size_t i = 0; i < s.forms.size(); ++i) {
    const bool is_target = static_cast<int>(i) + 1 == s.target;
    for (const auto& piece : wordpieces_of(s.forms[i])) {
      emb.pieces.push_back(WordpieceRecord{piece, synthetic_vector(piece, is_target ? tag : "", opt.seed, opt.dim)});
    }
  }
  emb.sep_vector = synthetic_vector("[SEP]", "", opt.seed, opt.dim);
  split.embeddings.push_back(std::move(emb));

  DependencySentence tree;
  tree.comments.push_back("# sent_id = " + sentence_id);
  for (std::size_t i = 0; i < s.forms.size(); ++i) {
    tree.tokens.push_back(ConlluToken{static_cast<int>(i) + 1, s.forms[i], std::nullopt,
                                      s.deprels[i] == "punct" ? std::optional<std::string>("PUNCT") : std::nullopt, s.heads[i], s.deprels[i]});
  }
  split.parses.push_back(std::move(tree));
}

inline SynthSplit make_split(SynthRng& rng, const std::string& split_name, int pairs, const SynthOptions& opt) {
  SynthSplit split;
  const int lemmas = std::clamp(opt.lemmas, 1, static_cast<int>(synth_lemmas().size()));
  for (int p = 0; p < pairs; ++p) {
    const std::string lemma = synth_lemmas()[rng.below(static_cast<std::uint64_t>(lemmas))];
    const char sense1 = rng.coin() ? 'B' : 'A';
    const char sense2 = rng.coin() ? 'B' : 'A';
    char id_buf[16];
    std::snprintf(id_buf, sizeof id_buf, "%05d", p);
    PairRecord r;
    r.id = "synth." + split_name + "." + id_buf;
    const auto s1 = make_sentence(rng, lemma, sense1);
    const auto s2 = make_sentence(rng, lemma, sense2);
    r.sentence1 = surface_text(s1, r.start1, r.end1);
    r.sentence2 = surface_text(s2, r.start2, r.end2);
    r.label = sense1 == sense2 ? 1 : 0;
    emit_sentence(split, s1, r.id + ".s1", lemma, sense1, opt);
    emit_sentence(split, s2, r.id + ".s2", lemma, sense2, opt);
    split.records.push_back(std::move(r));
  }
  return split;
}

}  // namespace detail

inline SynthCorpus make_synthetic_corpus(const SynthOptions& opt) {
  if (opt.dim <= 0) fail(Errc::BadConfig, "synthetic dimension must be positive");
  if (opt.train_pairs <= 0 || opt.dev_pairs <= 0) fail(Errc::BadConfig, "synthetic corpus needs train and dev pairs");
  detail::SynthRng rng(opt.seed);
  SynthCorpus c;
  c.train = detail::make_split(rng, "train", opt.train_pairs, opt);
  c.dev = detail::make_split(rng, "dev", opt.dev_pairs, opt);
  return c;
}

/// Writes <dir>/{train,dev}.jsonl, <dir>/embeddings/{train,dev}.wpe and
/// <dir>/parses/{train,dev}.conllu.
inline void write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpus& c) {
  const auto write_split = [&](const std::string& name, const SynthSplit& s) {
    write_dataset(dir / (name + ".jsonl"), s.records);
    write_embedding_file(dir / "embeddings" / (name + ".wpe"), s.embeddings);
    write_file_atomic(dir / "parses" / (name + ".conllu"), serialize_conllu(s.parses));
  };
  write_split("train", c.train);
  write_split("dev", c.dev);
}

/// Settings file pointing at a corpus written under `dir`.
inline std::string synthetic_settings_ini(const std::filesystem::path& dir, const SynthOptions& opt) {
  std::string ini;
  ini += "[data]\ntrain = " + (dir / "train.jsonl").string() + "\ndev = " + (dir / "dev.jsonl").string() + "\n";
  ini += "embeddings = " + (dir / "embeddings").string() + "\nparses = " + (dir / "parses").string() + "\n";
  ini += "cache_dir = " + (dir / "cache").string() + "\n\n";
  ini += "[features]\nvariant = concat+sum\nmarker = none\ndim = " + std::to_string(opt.dim) + "\n\n";
  // Synthetic vectors are unit-norm, far smaller than encoder states, so the
  // step size is raised from the library default.
  ini += "[train]\nclassifier = mlp\nseed = " + std::to_string(opt.seed) + "\nlearning_rate = 0.01\n";
  return ini;
}

}  // namespace depwsd
