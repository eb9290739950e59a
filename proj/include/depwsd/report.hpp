#pragma once

// Experiment reports. TSV columns are fixed:
//   variant  marker  dimension  train_size  seed  accuracy
// Markdown mirrors the usual "Embedding / Embed. Size / Test Acc." tables,
// pivoting train sizes into columns when there is more than one.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

struct ReportRow {
  std::string variant;  // embedding part plus amplification flag, e.g. "concat+sum/amp=0"
  std::string marker;
  int dimension = 0;
  int train_size = 0;
  std::uint64_t seed = 0;
  double accuracy = 0;
  double wall_seconds = 0;  // not emitted; timing would break byte-identical reports

  bool operator==(const ReportRow& o) const {
    return variant == o.variant && marker == o.marker && dimension == o.dimension && train_size == o.train_size && seed == o.seed &&
           accuracy == o.accuracy;
  }
};

struct ExperimentReport {
  std::string title;
  std::vector<std::pair<std::string, std::string>> settings;  // emitted in order
  std::vector<std::string> notes;
  std::vector<ReportRow> rows;
};

enum class ReportFormat { Tsv, Markdown };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "tsv") return ReportFormat::Tsv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  fail(Errc::BadConfig, "unknown report format '" + s + "'");
}

inline constexpr std::string_view kReportHeader = "variant\tmarker\tdimension\ttrain_size\tseed\taccuracy";

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline std::string emit_tsv(const ExperimentReport& report) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.variant + '\t' + r.marker + '\t' + std::to_string(r.dimension) + '\t' + std::to_string(r.train_size) + '\t' +
           std::to_string(r.seed) + '\t' + detail::fixed(r.accuracy, 6) + '\n';
  }
  return out;
}

inline std::string emit_markdown(const ExperimentReport& report) {
  std::string out = "# " + (report.title.empty() ? std::string("Experiment report") : report.title) + "\n\n";
  for (const auto& [k, v] : report.settings) out += "- " + k + ": " + v + "\n";
  for (const auto& n : report.notes) out += "- note: " + n + "\n";
  if (!report.settings.empty() || !report.notes.empty()) out += '\n';

  std::set<int> sizes;
  std::set<std::uint64_t> seeds;
  for (const auto& r : report.rows) {
    sizes.insert(r.train_size);
    seeds.insert(r.seed);
  }
  const auto pct = [](double a) { return detail::fixed(100.0 * a, 2) + "%"; };

  for (auto seed : seeds) {
    if (seeds.size() > 1) out += "## Seed " + std::to_string(seed) + "\n\n";
    if (sizes.size() <= 1) {
      out += "| Embedding | Boundary marker | Embed. Size | Test Acc. |\n";
      out += "|---|---|---:|---:|\n";
      for (const auto& r : report.rows) {
        if (r.seed != seed) continue;
        out += "| " + r.variant + " | " + r.marker + " | " + std::to_string(r.dimension) + " | " + pct(r.accuracy) + " |\n";
      }
    } else {
      // Learning curve: one row per (variant, marker), one column per size.
      std::vector<std::pair<std::string, std::string>> keys;
      std::map<std::pair<std::string, std::string>, std::pair<int, std::map<int, double>>> cells;
      for (const auto& r : report.rows) {
        if (r.seed != seed) continue;
        auto key = std::make_pair(r.variant, r.marker);
        if (!cells.contains(key)) keys.push_back(key);
        auto& cell = cells[key];
        cell.first = r.dimension;
        cell.second[r.train_size] = r.accuracy;
      }
      out += "| Embedding | Boundary marker | Embed. Size |";
      for (int s : sizes) out += " " + std::to_string(s) + " |";
      out += "\n|---|---|---:|";
      for (std::size_t i = 0; i < sizes.size(); ++i) out += "---:|";
      out += '\n';
      for (const auto& key : keys) {
        const auto& [dim, acc] = cells[key];
        out += "| " + key.first + " | " + key.second + " | " + std::to_string(dim) + " |";
        for (int s : sizes) {
          auto it = acc.find(s);
          out += " " + (it == acc.end() ? std::string("-") : pct(it->second)) + " |";
        }
        out += '\n';
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  return format == ReportFormat::Tsv ? emit_tsv(report) : emit_markdown(report);
}

inline void write_report(const std::filesystem::path& path, const ExperimentReport& report, ReportFormat format) {
  write_file_atomic(path, emit_report(report, format));
}

/// Reads rows back from TSV (settings and notes are not part of TSV).
inline ExperimentReport parse_tsv_report(std::string_view text) {
  ExperimentReport report;
  auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kReportHeader) fail(Errc::BadHeader, "report does not start with the expected TSV header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split(lines[i], '\t');
    if (f.size() != 6) fail(Errc::MalformedRow, "report line " + std::to_string(i + 1) + ": expected 6 columns");
    ReportRow r;
    try {
      r.variant = std::string(f[0]);
      r.marker = std::string(f[1]);
      r.dimension = std::stoi(std::string(f[2]));
      r.train_size = std::stoi(std::string(f[3]));
      r.seed = std::stoull(std::string(f[4]));
      r.accuracy = std::stod(std::string(f[5]));
    } catch (const std::exception&) {
      fail(Errc::MalformedRow, "report line " + std::to_string(i + 1) + ": bad numeric field");
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace depwsd
