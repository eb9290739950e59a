#pragma once

// Wordpiece embeddings: the WPE-v1 interchange format, subword merging,
// wordpiece/parser-token alignment, and a synthetic embedding source.
//
// WPE-v1 layout, one block per sentence:
//   === <sentence_id> dim=<d> pieces=<k>
//   <piece_text>\t<f1> ... <fd>        (k rows)
//   [SEP]\t<f1> ... <fd>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

inline constexpr int kDefaultDim = 768;

struct WordpieceRecord {
  std::string text;  // continuation pieces start with "##"
  std::vector<float> vector;

  bool operator==(const WordpieceRecord&) const = default;
};

struct SentenceEmbeddings {
  std::string id;
  std::vector<WordpieceRecord> pieces;
  std::vector<float> sep_vector;
  int dim = kDefaultDim;

  bool operator==(const SentenceEmbeddings&) const = default;
};

/// Half-open range of wordpiece positions, 0-based.
struct PieceRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool operator==(const PieceRange&) const = default;
};

/// ranges[i] covers parser token i + 1.
struct WordAlignment {
  std::vector<PieceRange> ranges;

  const PieceRange& for_token(int token_index) const {
    if (token_index < 1 || token_index > static_cast<int>(ranges.size())) {
      fail(Errc::IndexOutOfRange, "no alignment for token " + std::to_string(token_index));
    }
    return ranges[static_cast<std::size_t>(token_index - 1)];
  }
};

inline std::vector<double> merge_subwords(const std::vector<WordpieceRecord>& pieces, PieceRange range) {
  if (range.size() <= 0) fail(Errc::EmptyRange, "empty wordpiece range");
  if (range.begin < 0 || range.end > static_cast<int>(pieces.size())) {
    fail(Errc::IndexOutOfRange, "wordpiece range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                                    ") outside " + std::to_string(pieces.size()) + " pieces");
  }
  const auto d = pieces[static_cast<std::size_t>(range.begin)].vector.size();
  std::vector<double> mean(d, 0.0);
  for (int p = range.begin; p < range.end; ++p) {
    const auto& v = pieces[static_cast<std::size_t>(p)].vector;
    if (v.size() != d) fail(Errc::DimensionMismatch, "piece '" + pieces[static_cast<std::size_t>(p)].text + "' has dimension " + std::to_string(v.size()));
    for (std::size_t k = 0; k < d; ++k) mean[k] += v[k];
  }
  const double n = range.size();
  for (auto& x : mean) x /= n;
  return mean;
}

namespace detail {

inline bool is_unknown_piece(std::string_view t) { return t == "[UNK]"; }

// [CLS], [SEP], [PAD] and friends carry no surface text.
inline bool is_special_piece(std::string_view t) {
  return t.size() > 2 && t.front() == '[' && t.back() == ']' && !is_unknown_piece(t);
}

inline std::string normalize_surface(std::string_view t) {
  if (t.starts_with("##")) t.remove_prefix(2);
  std::string out;
  out.reserve(t.size());
  for (char c : t) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

}  // namespace detail

/// Greedy left-to-right character tiling of parser tokens by wordpieces.
/// Comparison ignores ASCII case and the "##" prefix; special pieces are
/// skipped; an [UNK] piece closes the token it appears in.
inline WordAlignment align_words(const std::vector<std::string>& tokens, const std::vector<WordpieceRecord>& pieces) {
  const int n = static_cast<int>(pieces.size());
  WordAlignment out;
  int p = 0;
  const auto skip_special = [&] {
    while (p < n && detail::is_special_piece(pieces[static_cast<std::size_t>(p)].text)) ++p;
  };
  const auto mismatch = [&](std::size_t ti, const std::string& why) {
    fail(Errc::AlignmentFailure, "token " + std::to_string(ti + 1) + " '" + tokens[ti] + "': " + why);
  };

  skip_special();
  if (p < n && pieces[static_cast<std::size_t>(p)].text.starts_with("##")) {
    fail(Errc::AlignmentFailure, "first wordpiece '" + pieces[static_cast<std::size_t>(p)].text + "' is a continuation piece");
  }

  for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
    const auto target = detail::normalize_surface(tokens[ti]);
    if (target.empty()) mismatch(ti, "token has no characters to align");
    skip_special();
    const int begin = p;
    std::size_t off = 0;
    while (off < target.size()) {
      skip_special();
      if (p >= n) mismatch(ti, "ran out of wordpieces");
      const auto& text = pieces[static_cast<std::size_t>(p)].text;
      if (detail::is_unknown_piece(text)) {
        off = target.size();
        ++p;
        break;
      }
      const auto piece = detail::normalize_surface(text);
      if (piece.empty()) mismatch(ti, "wordpiece '" + text + "' is empty");
      if (target.compare(off, piece.size(), piece) != 0) {
        mismatch(ti, "wordpiece '" + text + "' does not continue the token at character " + std::to_string(off));
      }
      off += piece.size();
      ++p;
    }
    out.ranges.push_back(PieceRange{begin, p});
  }
  skip_special();
  if (p < n) {
    fail(Errc::AlignmentFailure, "wordpiece '" + pieces[static_cast<std::size_t>(p)].text + "' is left over after the last token");
  }
  return out;
}

namespace detail {

inline void append_floats(std::string& out, const std::vector<float>& v) {
  char buf[32];
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out.push_back(' ');
    // 9 significant digits round-trip every binary32 value.
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v[k], std::chars_format::scientific, 8);
    out.append(buf, end);
  }
}

inline std::vector<float> parse_floats(std::string_view s, int dim, int line_no) {
  std::vector<float> v;
  v.reserve(static_cast<std::size_t>(dim));
  for (auto field : split(s, ' ')) {
    if (field.empty()) continue;
    float x = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
    if (ec != std::errc() || p != field.data() + field.size()) {
      fail(Errc::FloatParseError, "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
    }
    v.push_back(x);
  }
  if (static_cast<int>(v.size()) != dim) {
    fail(Errc::DimensionMismatch, "line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values, got " + std::to_string(v.size()));
  }
  return v;
}

inline int parse_header_int(std::string_view field, std::string_view key, int line_no) {
  if (!field.starts_with(key)) fail(Errc::BadHeader, "line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
  field.remove_prefix(key.size());
  int v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size() || v < 0) {
    fail(Errc::BadHeader, "line " + std::to_string(line_no) + ": bad value for '" + std::string(key) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string write_embedding_text(const std::vector<SentenceEmbeddings>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    out += "=== " + s.id + " dim=" + std::to_string(s.dim) + " pieces=" + std::to_string(s.pieces.size()) + "\n";
    for (const auto& p : s.pieces) {
      out += p.text;
      out += '\t';
      detail::append_floats(out, p.vector);
      out += '\n';
    }
    out += "[SEP]\t";
    detail::append_floats(out, s.sep_vector);
    out += '\n';
  }
  return out;
}

inline std::vector<SentenceEmbeddings> read_embedding_text(std::string_view text) {
  std::vector<SentenceEmbeddings> out;
  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    const int header_line = static_cast<int>(i) + 1;
    auto header = lines[i++];
    if (trim(header).empty()) continue;
    auto fields = split(header, ' ');
    if (fields.size() != 4 || fields[0] != "===" || fields[1].empty()) {
      fail(Errc::BadHeader, "line " + std::to_string(header_line) + ": expected '=== <id> dim=<d> pieces=<k>'");
    }
    SentenceEmbeddings s;
    s.id = std::string(fields[1]);
    s.dim = detail::parse_header_int(fields[2], "dim=", header_line);
    const int k = detail::parse_header_int(fields[3], "pieces=", header_line);
    if (s.dim <= 0) fail(Errc::BadHeader, "line " + std::to_string(header_line) + ": dim must be positive");
    for (int j = 0; j < k; ++j, ++i) {
      if (i >= lines.size()) fail(Errc::BadHeader, "sentence '" + s.id + "' declares " + std::to_string(k) + " pieces but the file ends");
      auto tab = lines[i].find('\t');
      if (tab == std::string_view::npos || lines[i].starts_with("=== ")) {
        fail(Errc::BadHeader, "line " + std::to_string(i + 1) + ": expected '<piece>\\t<values>'");
      }
      s.pieces.push_back(WordpieceRecord{std::string(lines[i].substr(0, tab)),
                                         detail::parse_floats(lines[i].substr(tab + 1), s.dim, static_cast<int>(i) + 1)});
    }
    if (i >= lines.size() || !lines[i].starts_with("[SEP]\t")) {
      fail(Errc::MissingSepVector, "sentence '" + s.id + "' has no [SEP] row after its pieces");
    }
    s.sep_vector = detail::parse_floats(lines[i].substr(6), s.dim, static_cast<int>(i) + 1);
    ++i;
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<SentenceEmbeddings> read_embedding_file(const std::filesystem::path& path) {
  return read_embedding_text(read_file(path));
}

inline void write_embedding_file(const std::filesystem::path& path, const std::vector<SentenceEmbeddings>& sentences) {
  write_file_atomic(path, write_embedding_text(sentences));
}

/// Unit-norm Gaussian direction that depends only on (text, sense_tag, seed, d).
inline std::vector<float> synthetic_vector(std::string_view text, std::string_view sense_tag, std::uint64_t seed, int d) {
  const auto key = Fnv1a64().field(text).field(sense_tag).update_u64(seed).update_u64(static_cast<std::uint64_t>(d)).digest();
  CounterRng rng(key);
  std::vector<double> g(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < g.size(); k += 2) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double r = std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    g[k] = r * std::cos(theta);
    if (k + 1 < g.size()) g[k + 1] = r * std::sin(theta);
  }
  double norm = 0;
  for (double x : g) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<float> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = static_cast<float>(g[k] / norm);
  return v;
}

inline SentenceEmbeddings synthetic_embeddings(const std::vector<std::string>& sentence_tokens, std::string_view sense_tag,
                                               std::uint64_t seed, int d = kDefaultDim) {
  if (d <= 0) fail(Errc::DimensionMismatch, "embedding dimension must be positive");
  SentenceEmbeddings s;
  s.dim = d;
  for (const auto& t : sentence_tokens) s.pieces.push_back(WordpieceRecord{t, synthetic_vector(t, sense_tag, seed, d)});
  s.sep_vector = synthetic_vector("[SEP]", "", seed, d);
  return s;
}

}  // namespace depwsd
