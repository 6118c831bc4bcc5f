#pragma once

// Serialization of result tables (CSV or JSON) and flattening of simulation
// reports and analysis metrics into tables.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "peerrev/analyze.hpp"
#include "peerrev/error.hpp"
#include "peerrev/experiments.hpp"
#include "peerrev/ingest.hpp"
#include "peerrev/platform.hpp"

namespace peerrev {

enum class OutputFormat { csv, json };

inline std::string to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline OutputFormat output_format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw InvalidArgument("unknown output format '" + s + "' (use csv or json)");
}

inline std::string extension(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".json"; }

// Empty for a missing value; doubles in shortest round-trip form.
inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return detail::format_double(v);
        } else {
          return v;
        }
      },
      c);
}

inline nlohmann::json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      c);
}

inline void write_csv(std::ostream& out, const ResultTable& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << detail::quote_if_needed(t.columns[c], ',');
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << detail::quote_if_needed(format_cell(row[c]), ',');
    out << '\n';
  }
}

// {"name": ..., "columns": [...], "rows": [[...], ...]}
inline nlohmann::json to_json(const ResultTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(cell_json(c));
    rows.push_back(std::move(r));
  }
  return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

inline void write_table(std::ostream& out, const ResultTable& t, OutputFormat f) {
  if (f == OutputFormat::csv) {
    write_csv(out, t);
  } else {
    out << to_json(t).dump(2) << '\n';
  }
}

// ---- flattening ----

inline ResultTable metrics_table(const std::vector<MetricRecord>& records, std::string name = "metrics") {
  ResultTable t{std::move(name), {"metric", "group", "value", "stderr", "n"}, {}};
  for (const auto& m : records) t.add({m.metric, m.group, m.value, cell(m.stderr_value), cell(m.n)});
  return t;
}

inline ResultTable skipped_table(const std::vector<SkippedAnalysis>& skipped) {
  ResultTable t{"skipped", {"analysis", "reason"}, {}};
  for (const auto& s : skipped) t.add({s.analysis, s.reason});
  return t;
}

// One row per (replicate, year, method).
inline ResultTable year_metrics_table(const std::vector<SimReport>& reps) {
  ResultTable t{"year_metrics", {"replicate", "year", "method", "correlation", "coverage", "n_published", "note"}, {}};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    for (const auto& y : reps[k].years) {
      for (const auto& m : y.methods) {
        t.add({cell(k), cell(std::size_t{y.year}), to_string(m.method), cell(m.correlation), m.coverage,
               cell(m.n_published), m.note});
      }
    }
  }
  return t;
}

// One row per (replicate, year): population, volume, concentration and bot separability.
inline ResultTable year_summary_table(const std::vector<SimReport>& reps) {
  ResultTable t{"year_summary",
                {"replicate", "year", "live_users", "joined", "churned", "n_papers", "n_reviews", "n_ratings",
                 "reviews_written", "reviews_forfeited", "gini", "max_share", "bot_balanced_accuracy"},
                {}};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    for (const auto& y : reps[k].years) {
      t.add({cell(k), cell(std::size_t{y.year}), cell(y.live_users), cell(y.joined), cell(y.churned),
             cell(y.n_papers), cell(y.n_reviews), cell(y.n_ratings), cell(y.reviews_written),
             cell(y.reviews_forfeited), y.review_concentration.gini, y.review_concentration.max_share,
             cell(y.bot_split.balanced_accuracy)});
    }
  }
  return t;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, x, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

}  // namespace peerrev
