#pragma once

// CoNLL-U ingestion: basic dependency trees only (ID FORM LEMMA UPOS XPOS
// FEATS HEAD DEPREL DEPS MISC). Multiword ranges ("3-4") and empty nodes
// ("3.1") are skipped. XPOS, FEATS, DEPS and MISC are not retained.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

struct ConlluToken {
  int index = 0;  // 1-based
  std::string form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  int head = 0;  // 0 = root
  std::string deprel;

  bool operator==(const ConlluToken&) const = default;
};

struct DependencySentence {
  std::vector<std::string> comments;  // raw comment lines, including '#'
  std::vector<ConlluToken> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  const ConlluToken& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }

  /// Value of a "# sent_id = ..." comment, or empty.
  std::string sent_id() const {
    for (const auto& c : comments) {
      auto body = trim(std::string_view(c).substr(1));
      if (body.starts_with("sent_id")) {
        auto eq = body.find('=');
        if (eq != std::string_view::npos) return std::string(trim(body.substr(eq + 1)));
      }
    }
    return {};
  }

  std::vector<std::string> forms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.form);
    return out;
  }

  bool operator==(const DependencySentence&) const = default;
};

namespace detail {

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::string> optional_column(std::string_view s) {
  if (s == "_") return std::nullopt;
  return std::string(s);
}

inline void validate_tree(const DependencySentence& s, int first_line) {
  const int n = s.size();
  const auto where = [&] { return " (sentence starting at line " + std::to_string(first_line) + ")"; };
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const auto& t = s.token(i);
    if (t.index != i) fail(Errc::NonContiguousIds, "expected id " + std::to_string(i) + ", got " + std::to_string(t.index) + where());
    if (t.head < 0 || t.head > n) fail(Errc::BadHeadIndex, "token " + std::to_string(i) + " has head " + std::to_string(t.head) + where());
    if (t.head == i) fail(Errc::CycleDetected, "token " + std::to_string(i) + " is its own head" + where());
    if (t.head == 0) ++roots;
  }
  if (roots > 1) fail(Errc::MultipleRoots, std::to_string(roots) + " root tokens" + where());
  // With no root every chain must loop, so the walk below reports it.
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != 0) {
      if (++steps > n) fail(Errc::CycleDetected, "head chain from token " + std::to_string(i) + " does not reach the root" + where());
      cur = s.token(cur).head;
    }
  }
}

}  // namespace detail

inline std::vector<DependencySentence> parse_conllu(std::string_view text) {
  std::vector<DependencySentence> out;
  DependencySentence cur;
  int block_start = 0;
  int line_no = 0;

  const auto flush = [&] {
    if (!cur.tokens.empty()) {
      detail::validate_tree(cur, block_start);
      out.push_back(std::move(cur));
    }
    cur = DependencySentence{};
  };

  for (auto line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (cur.tokens.empty() && cur.comments.empty()) block_start = line_no;
    if (line.front() == '#') {
      cur.comments.emplace_back(line);
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 10) {
      fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    }
    if (cols[0].find_first_of("-.") != std::string_view::npos) continue;
    auto id = detail::parse_int(cols[0]);
    auto head = detail::parse_int(cols[6]);
    if (!id || *id <= 0) fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": bad id '" + std::string(cols[0]) + "'");
    if (!head) fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": bad head '" + std::string(cols[6]) + "'");
    cur.tokens.push_back(ConlluToken{*id, std::string(cols[1]), detail::optional_column(cols[2]),
                                     detail::optional_column(cols[3]), *head, std::string(cols[7])});
  }
  flush();
  return out;
}

inline void check_index(const DependencySentence& s, int i) {
  if (i < 1 || i > s.size()) {
    fail(Errc::IndexOutOfRange, "token index " + std::to_string(i) + " outside 1.." + std::to_string(s.size()));
  }
}

inline std::optional<int> head_of(const DependencySentence& s, int i) {
  check_index(s, i);
  int h = s.token(i).head;
  if (h == 0) return std::nullopt;
  return h;
}

/// Tokens whose head is i, ascending.
inline std::vector<int> dependents_of(const DependencySentence& s, int i) {
  check_index(s, i);
  std::vector<int> deps;
  for (const auto& t : s.tokens)
    if (t.head == i) deps.push_back(t.index);
  return deps;
}

inline std::string serialize_conllu(const std::vector<DependencySentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (const auto& c : s.comments) {
      out += c;
      out += '\n';
    }
    for (const auto& t : s.tokens) {
      out += std::to_string(t.index);
      out += '\t';
      out += t.form;
      out += '\t';
      out += t.lemma.value_or("_");
      out += '\t';
      out += t.upos.value_or("_");
      out += "\t_\t_\t";
      out += std::to_string(t.head);
      out += '\t';
      out += t.deprel.empty() ? std::string("_") : t.deprel;
      out += "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

}  // namespace depwsd
