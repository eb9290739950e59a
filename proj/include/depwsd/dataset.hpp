#pragma once

// Sentence-pair records, one JSON object per line:
//   {"id": "...", "lang1": "en", "lang2": "fr",
//    "sentence1": "...", "start1": 4, "end1": 9,
//    "sentence2": "...", "start2": 0, "end2": 6, "label": "T"}
// Offsets count Unicode code points, end exclusive. "label" is T or F and
// may be omitted for unlabelled data.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

struct PairRecord {
  std::string id;
  std::string lang1 = "en";
  std::string lang2 = "en";
  std::string sentence1;
  std::string sentence2;
  int start1 = 0, end1 = 0;
  int start2 = 0, end2 = 0;
  std::optional<int> label;  // T = 1, F = 0

  bool operator==(const PairRecord&) const = default;
};

inline int label_from_string(const std::string& s) {
  if (s == "T") return 1;
  if (s == "F") return 0;
  fail(Errc::BadLabel, "label must be \"T\" or \"F\", got \"" + s + "\"");
}

inline const char* label_to_string(int label) { return label == 1 ? "T" : "F"; }

inline int codepoint_length(const std::string& s) { return static_cast<int>(codepoint_offsets(s).size()) - 1; }

inline void validate_record(const PairRecord& r) {
  const auto check = [&](const std::string& sentence, int start, int end, const char* which) {
    const int len = codepoint_length(sentence);
    if (start < 0 || start >= end || end > len) {
      fail(Errc::SpanOutOfBounds, "record '" + r.id + "': " + which + " span [" + std::to_string(start) + ", " + std::to_string(end) +
                                      ") does not fit a sentence of " + std::to_string(len) + " characters");
    }
  };
  check(r.sentence1, r.start1, r.end1, "sentence1");
  check(r.sentence2, r.start2, r.end2, "sentence2");
}

inline PairRecord record_from_json(const nlohmann::json& j, int line_no) {
  const auto where = [&](const char* key) { return "line " + std::to_string(line_no) + ": missing or mistyped field '" + key + "'"; };
  const auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) fail(Errc::MissingField, where(key));
    return it->get<std::string>();
  };
  const auto num = [&](const char* key) -> int {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) fail(Errc::MissingField, where(key));
    return it->get<int>();
  };
  PairRecord r;
  r.id = str("id");
  r.lang1 = str("lang1");
  r.lang2 = str("lang2");
  r.sentence1 = str("sentence1");
  r.sentence2 = str("sentence2");
  r.start1 = num("start1");
  r.end1 = num("end1");
  r.start2 = num("start2");
  r.end2 = num("end2");
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail(Errc::BadLabel, "line " + std::to_string(line_no) + ": label must be a string");
    r.label = label_from_string(it->get<std::string>());
  }
  return r;
}

inline nlohmann::ordered_json record_to_json(const PairRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["lang1"] = r.lang1;
  j["lang2"] = r.lang2;
  j["sentence1"] = r.sentence1;
  j["start1"] = r.start1;
  j["end1"] = r.end1;
  j["sentence2"] = r.sentence2;
  j["start2"] = r.start2;
  j["end2"] = r.end2;
  if (r.label) j["label"] = label_to_string(*r.label);
  return j;
}

/// Parses JSON-lines text. With `require_labels`, every record must carry T/F.
inline std::vector<PairRecord> parse_dataset(std::string_view text, bool require_labels = true) {
  std::vector<PairRecord> out;
  int line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected a JSON object");
    auto r = record_from_json(j, line_no);
    if (require_labels && !r.label) fail(Errc::MissingField, "line " + std::to_string(line_no) + ": record '" + r.id + "' has no label");
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PairRecord> load_dataset(const std::filesystem::path& path, bool require_labels = true) {
  return parse_dataset(read_file(path), require_labels);
}

inline std::string dataset_text(const std::vector<PairRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& path, const std::vector<PairRecord>& records) {
  write_file_atomic(path, dataset_text(records));
}

/// Parser tokens (1-based) whose character range overlaps [start, end).
/// Token positions are found by scanning the sentence for each form in order.
inline std::vector<int> tokens_in_span(const std::string& sentence, const std::vector<std::string>& forms, int start, int end) {
  const auto cps = codepoint_offsets(sentence);
  const auto to_cp = [&](std::size_t byte) {
    return static_cast<int>(std::lower_bound(cps.begin(), cps.end(), byte) - cps.begin());
  };
  std::vector<int> hits;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const auto pos = sentence.find(forms[i], cursor);
    if (forms[i].empty() || pos == std::string::npos) {
      fail(Errc::AlignmentFailure, "parse token " + std::to_string(i + 1) + " '" + forms[i] + "' does not occur in the sentence text");
    }
    cursor = pos + forms[i].size();
    const int tok_start = to_cp(pos), tok_end = to_cp(cursor);
    if (tok_start < end && start < tok_end) hits.push_back(static_cast<int>(i) + 1);
  }
  return hits;
}

}  // namespace depwsd
