#pragma once

// Key-value settings with INI sections. Keys are addressed as
// "section.key"; command-line flags write into the same namespace after the
// file is loaded, so a flag always wins over the file.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

inline const std::set<std::string>& known_setting_keys() {
  static const std::set<std::string> keys = {
      "data.train",          "data.dev",           "data.embeddings",     "data.parses",      "data.cache_dir",
      "data.out",            "data.model",         "features.variant",    "features.marker",  "features.dim",
      "features.amplify_factor", "features.dependents", "train.classifier", "train.seed",     "train.learning_rate",
      "train.batch_size",    "train.max_epochs",   "train.tolerance",     "train.l2",         "train.momentum",
      "train.patience",      "train.holdout_fraction", "train.hidden",    "experiment.train_sizes", "experiment.preset",
      "experiment.title",    "synth.train_pairs",  "synth.dev_pairs",     "synth.lemmas",     "report.format",
  };
  return keys;
}

class Settings {
 public:
  static Settings from_ini_text(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(Errc::BadConfig, std::string("config: ") + e.what());
    }
    Settings s;
    for (const auto& [section, body] : tree) {
      if (body.empty()) fail(Errc::BadConfig, "config: key '" + section + "' must live inside a [section]");
      for (const auto& [key, value] : body) s.set(section + "." + key, value.get_value<std::string>());
    }
    return s;
  }

  static Settings from_ini_file(const std::filesystem::path& path) { return from_ini_text(read_file(path)); }

  void set(const std::string& key, std::string value) {
    if (!known_setting_keys().contains(key)) fail(Errc::BadConfig, "unknown setting '" + key + "'");
    values_[key] = std::move(value);
  }

  /// "section.key=value"
  void set_assignment(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(Errc::BadConfig, "expected section.key=value, got '" + assignment + "'");
    set(std::string(trim(std::string_view(assignment).substr(0, eq))), std::string(trim(std::string_view(assignment).substr(eq + 1))));
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) fail(Errc::BadConfig, "setting '" + key + "' is required");
    return *v;
  }

  template <class T>
  T number_or(const std::string& key, T fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    T out{};
    auto s = trim(*v);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) fail(Errc::BadConfig, "setting '" + key + "' is not a valid number: '" + *v + "'");
    return out;
  }

  /// Comma-separated list; empty entries dropped.
  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (auto v = get(key))
      for (auto part : split(*v, ','))
        if (auto t = trim(part); !t.empty()) out.emplace_back(t);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Parses "1000,1500" or a range "1000:8000:500" (inclusive).
inline std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  const auto to_int = [&](std::string_view s) {
    s = trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(Errc::BadConfig, "bad integer '" + std::string(s) + "' in '" + spec + "'");
    return v;
  };
  for (auto part : split(spec, ',')) {
    if (trim(part).empty()) continue;
    auto fields = split(part, ':');
    if (fields.size() == 1) {
      out.push_back(to_int(fields[0]));
    } else if (fields.size() == 3) {
      const int lo = to_int(fields[0]), hi = to_int(fields[1]), step = to_int(fields[2]);
      if (step <= 0 || hi < lo) fail(Errc::BadConfig, "bad range '" + std::string(part) + "'");
      for (int v = lo; v <= hi; v += step) out.push_back(v);
    } else {
      fail(Errc::BadConfig, "bad list entry '" + std::string(part) + "'");
    }
  }
  return out;
}

}  // namespace depwsd
