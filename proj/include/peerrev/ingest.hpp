#pragma once

// Loading and writing review, rating, authorship and ground-truth tables as
// delimited text with a header row, or as one JSON object per line.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "peerrev/error.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/tables.hpp"
#include "peerrev/types.hpp"

namespace peerrev {

enum class TableKind { reviews, ratings, authorship, papers, agents };
enum class RecordFormat { csv, jsonl };

inline std::string to_string(TableKind k) {
  switch (k) {
    case TableKind::reviews: return "reviews";
    case TableKind::ratings: return "ratings";
    case TableKind::authorship: return "authorship";
    case TableKind::papers: return "papers";
    case TableKind::agents: return "agents";
  }
  return "?";
}

// Declared value range, mapped affinely onto [0,1].
struct ValueRange {
  double min = 0.0;
  double max = 1.0;

  void validate() const {
    if (!(std::isfinite(min) && std::isfinite(max) && min < max)) throw InvalidArgument("value range needs min < max");
  }
  [[nodiscard]] double rescale(double v) const {
    if (min == 0.0 && max == 1.0) return v;
    return (v - min) / (max - min);
  }
  [[nodiscard]] bool contains(double v) const { return v >= min && v <= max; }
};

struct ColumnRole {
  std::string role;
  std::string header;  // column name (CSV) or key (JSONL)
  bool required = true;
};

struct RecordSchema {
  TableKind kind = TableKind::reviews;
  std::vector<ColumnRole> columns;
  ValueRange value_range;  // score or rating column
  RecordFormat format = RecordFormat::csv;
  char delimiter = ',';

  static RecordSchema defaults(TableKind kind, RecordFormat format = RecordFormat::csv) {
    RecordSchema s;
    s.kind = kind;
    s.format = format;
    auto req = [](const char* r) { return ColumnRole{r, r, true}; };
    auto opt = [](const char* r) { return ColumnRole{r, r, false}; };
    switch (kind) {
      case TableKind::reviews:
        s.columns = {req("reviewer_id"), req("paper_id"), req("score"), opt("confidence"), opt("year")};
        break;
      case TableKind::ratings:
        s.columns = {req("rater_id"), req("ratee_id"), req("rating"), opt("year")};
        break;
      case TableKind::authorship:
        s.columns = {req("author_id"), req("paper_id")};
        break;
      case TableKind::papers:
        s.columns = {req("paper_id"), req("true_quality"), req("author_id")};
        break;
      case TableKind::agents:
        s.columns = {req("agent_id"), req("true_quality"), req("is_bot")};
        break;
    }
    return s;
  }

  // Rename the column behind a role, e.g. map "score" to a conference's "impact".
  RecordSchema& rename(const std::string& role, const std::string& header) {
    for (auto& c : columns) {
      if (c.role == role) {
        c.header = header;
        return *this;
      }
    }
    throw InvalidArgument("schema for " + to_string(kind) + " has no role '" + role + "'");
  }

  void validate() const {
    value_range.validate();
    const auto required = defaults(kind).columns;
    for (const auto& r : required) {
      bool found = false;
      for (const auto& c : columns) found = found || (c.role == r.role);
      if (r.required && !found) throw InvalidArgument("schema lacks required role '" + r.role + "'");
    }
    std::set<std::string> headers;
    for (const auto& c : columns) {
      if (c.header.empty()) throw InvalidArgument("empty header for role '" + c.role + "'");
      if (!headers.insert(c.header).second) throw InvalidArgument("header '" + c.header + "' used twice");
    }
  }

  [[nodiscard]] std::size_t index_of(const std::string& role) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].role == role) return i;
    }
    throw InvalidArgument("schema has no role '" + role + "'");
  }
};

inline RecordFormat format_from_path(const std::string& path) {
  auto ends = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".jsonl") || ends(".json") || ends(".ndjson") ? RecordFormat::jsonl : RecordFormat::csv;
}

// Label spaces shared by the tables of one dataset: users (reviewers, raters,
// authors, agents) and papers.
struct IdMaps {
  Labels users;
  Labels papers;
};

namespace detail {

// Collects per-line problems and throws them together.
class ErrorList {
 public:
  explicit ErrorList(std::string what) : what_(std::move(what)) {}
  void add(std::size_t line, const std::string& msg) {
    ++count_;
    if (lines_.size() < kShown) lines_.push_back("line " + std::to_string(line) + ": " + msg);
  }
  void add(const std::string& msg) {
    ++count_;
    if (lines_.size() < kShown) lines_.push_back(msg);
  }
  void raise_if_any() const {
    if (count_ == 0) return;
    std::string msg = what_ + ": " + std::to_string(count_) + " problem(s)";
    for (const auto& l : lines_) msg += "\n  " + l;
    if (count_ > lines_.size()) msg += "\n  ...";
    throw ValidationError(msg);
  }

 private:
  static constexpr std::size_t kShown = 20;
  std::string what_;
  std::vector<std::string> lines_;
  std::size_t count_ = 0;
};

// One delimited line, with double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_delimited(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Calls fn(line_number, fields) with fields ordered as schema.columns; absent
// optional columns yield nullopt.
template <class Fn>
void for_each_record(std::istream& in, const RecordSchema& schema, ErrorList& errors, Fn&& fn) {
  schema.validate();
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::optional<std::string>> fields(schema.columns.size());
  if (schema.format == RecordFormat::csv) {
    std::vector<std::optional<std::size_t>> pos(schema.columns.size());
    bool have_header = false;
    std::size_t width = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      std::vector<std::string> parts;
      try {
        parts = split_delimited(line, schema.delimiter);
      } catch (const ValidationError& e) {
        errors.add(lineno, e.what());
        continue;
      }
      for (auto& p : parts) p = trim(std::move(p));
      if (!have_header) {
        have_header = true;
        width = parts.size();
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
          for (std::size_t k = 0; k < parts.size(); ++k) {
            if (parts[k] == schema.columns[c].header) pos[c] = k;
          }
          if (!pos[c] && schema.columns[c].required) {
            throw ValidationError(to_string(schema.kind) + ": missing column '" + schema.columns[c].header + "'");
          }
        }
        continue;
      }
      if (parts.size() != width) {
        errors.add(lineno, "expected " + std::to_string(width) + " fields, found " + std::to_string(parts.size()));
        continue;
      }
      for (std::size_t c = 0; c < pos.size(); ++c) {
        fields[c] = pos[c] && !parts[*pos[c]].empty() ? std::optional<std::string>(parts[*pos[c]]) : std::nullopt;
      }
      fn(lineno, fields);
    }
    if (!have_header) throw ValidationError(to_string(schema.kind) + ": missing header row");
    return;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      errors.add(lineno, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!obj.is_object()) {
      errors.add(lineno, "expected a JSON object");
      continue;
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      auto it = obj.find(schema.columns[c].header);
      if (it == obj.end() || it->is_null()) {
        fields[c] = std::nullopt;
      } else if (it->is_string()) {
        fields[c] = it->get<std::string>();
      } else if (it->is_boolean()) {
        fields[c] = it->get<bool>() ? "1" : "0";
      } else if (it->is_number_integer() || it->is_number_unsigned()) {
        fields[c] = it->dump();
      } else if (it->is_number_float()) {
        // Re-render through to_chars so the text parses back to the same double.
        const double d = it->get<double>();
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, d);
        fields[c] = std::string(buf, res.ptr);
      } else {
        fields[c] = it->dump();
      }
    }
    fn(lineno, fields);
  }
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint32_t> parse_uint(const std::string& s) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  return std::nullopt;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find_first_of(std::string("\"\n\r") + delim) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Either writes a header row and delimited rows, or one JSON object per row.
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, const RecordSchema& schema) : out_(out), schema_(schema) {
    if (schema_.format == RecordFormat::csv) {
      for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
        if (c) out_ << schema_.delimiter;
        out_ << quote_if_needed(schema_.columns[c].header, schema_.delimiter);
      }
      out_ << '\n';
    }
  }

  // values[i] is the text for column i (already formatted); nullopt leaves it empty / omits it.
  // numeric[i] marks values written as JSON numbers.
  void row(const std::vector<std::optional<std::string>>& values, const std::vector<bool>& numeric) {
    if (schema_.format == RecordFormat::csv) {
      for (std::size_t c = 0; c < values.size(); ++c) {
        if (c) out_ << schema_.delimiter;
        if (values[c]) out_ << quote_if_needed(*values[c], schema_.delimiter);
      }
      out_ << '\n';
      return;
    }
    out_ << '{';
    bool first = true;
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (!values[c]) continue;
      if (!first) out_ << ',';
      first = false;
      out_ << nlohmann::json(schema_.columns[c].header).dump() << ':';
      if (numeric[c]) {
        out_ << *values[c];
      } else {
        out_ << nlohmann::json(*values[c]).dump();
      }
    }
    out_ << "}\n";
  }

 private:
  std::ostream& out_;
  const RecordSchema& schema_;
};

inline std::string user_label(const IdMaps* ids, UserId u) { return ids ? ids->users.name(u) : std::to_string(u); }
inline std::string paper_label(const IdMaps* ids, PaperId p) { return ids ? ids->papers.name(p) : std::to_string(p); }

// JSON number text for an id when it is numeric, so JSONL output keeps plain integers.
inline bool numeric_label(const std::string& s) { return Labels::is_canonical_uint(s); }

}  // namespace detail

inline ReviewTable load_review_table(std::istream& in, const RecordSchema& schema, IdMaps& ids) {
  if (schema.kind != TableKind::reviews) throw InvalidArgument("schema is not for reviews");
  const auto i_rev = schema.index_of("reviewer_id"), i_pap = schema.index_of("paper_id"),
             i_score = schema.index_of("score");
  std::optional<std::size_t> i_conf, i_year;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].role == "confidence") i_conf = c;
    if (schema.columns[c].role == "year") i_year = c;
  }
  ReviewTable table;
  detail::ErrorList errors("reviews");
  std::map<std::pair<UserId, PaperId>, std::vector<std::size_t>> dup_lines;
  std::map<std::pair<UserId, PaperId>, std::size_t> first_line;
  detail::for_each_record(in, schema, errors, [&](std::size_t line, const auto& f) {
    if (!f[i_rev] || !f[i_pap] || !f[i_score]) {
      errors.add(line, "missing reviewer_id, paper_id or score");
      return;
    }
    const auto score = detail::parse_double(*f[i_score]);
    if (!score) {
      errors.add(line, "unparseable score '" + *f[i_score] + "'");
      return;
    }
    if (!schema.value_range.contains(*score)) {
      errors.add(line, "score " + *f[i_score] + " outside declared range [" + detail::format_double(schema.value_range.min) +
                           ", " + detail::format_double(schema.value_range.max) + "]");
      return;
    }
    Review r;
    try {
      r.reviewer = ids.users.intern(*f[i_rev]);
      r.paper = ids.papers.intern(*f[i_pap]);
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
      return;
    }
    r.score = schema.value_range.rescale(*score);
    if (i_conf && f[*i_conf]) {
      const auto c = detail::parse_double(*f[*i_conf]);
      if (!c) {
        errors.add(line, "unparseable confidence '" + *f[*i_conf] + "'");
        return;
      }
      r.confidence = *c;
    }
    if (i_year && f[*i_year]) {
      const auto y = detail::parse_uint(*f[*i_year]);
      if (!y) {
        errors.add(line, "unparseable year '" + *f[*i_year] + "'");
        return;
      }
      r.year = *y;
    }
    const auto key = std::make_pair(r.reviewer, r.paper);
    if (table.contains(r.reviewer, r.paper)) {
      dup_lines[key].push_back(line);
      return;
    }
    first_line[key] = line;
    table.add(r);
  });
  for (const auto& [key, lines] : dup_lines) {
    std::string where = "line " + std::to_string(first_line[key]);
    for (auto l : lines) where += ", " + std::to_string(l);
    errors.add("duplicate review (reviewer " + ids.users.name(key.first) + ", paper " + ids.papers.name(key.second) +
               ") on " + where);
  }
  errors.raise_if_any();
  return table;
}

inline RatingTable load_rating_table(std::istream& in, const RecordSchema& schema, IdMaps& ids) {
  if (schema.kind != TableKind::ratings) throw InvalidArgument("schema is not for ratings");
  const auto i_rater = schema.index_of("rater_id"), i_ratee = schema.index_of("ratee_id"),
             i_val = schema.index_of("rating");
  std::optional<std::size_t> i_year;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].role == "year") i_year = c;
  }
  RatingTable table;
  detail::ErrorList errors("ratings");
  detail::for_each_record(in, schema, errors, [&](std::size_t line, const auto& f) {
    if (!f[i_rater] || !f[i_ratee] || !f[i_val]) {
      errors.add(line, "missing rater_id, ratee_id or rating");
      return;
    }
    const auto v = detail::parse_double(*f[i_val]);
    if (!v) {
      errors.add(line, "unparseable rating '" + *f[i_val] + "'");
      return;
    }
    if (!schema.value_range.contains(*v)) {
      errors.add(line, "rating " + *f[i_val] + " outside declared range");
      return;
    }
    Rating r;
    try {
      r.rater = ids.users.intern(*f[i_rater]);
      r.ratee = ids.users.intern(*f[i_ratee]);
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
      return;
    }
    r.value = schema.value_range.rescale(*v);
    if (i_year && f[*i_year]) {
      const auto y = detail::parse_uint(*f[*i_year]);
      if (!y) {
        errors.add(line, "unparseable year '" + *f[*i_year] + "'");
        return;
      }
      r.year = *y;
    }
    try {
      table.add(r);
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
    }
  });
  errors.raise_if_any();
  return table;
}

inline Authorship load_authorship(std::istream& in, const RecordSchema& schema, IdMaps& ids) {
  if (schema.kind != TableKind::authorship) throw InvalidArgument("schema is not for authorship");
  const auto i_author = schema.index_of("author_id"), i_paper = schema.index_of("paper_id");
  Authorship out;
  detail::ErrorList errors("authorship");
  detail::for_each_record(in, schema, errors, [&](std::size_t line, const auto& f) {
    if (!f[i_author] || !f[i_paper]) {
      errors.add(line, "missing author_id or paper_id");
      return;
    }
    try {
      out[ids.users.intern(*f[i_author])].insert(ids.papers.intern(*f[i_paper]));
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
    }
  });
  errors.raise_if_any();
  return out;
}

// Authored papers must exist: in the paper truth table when one is loaded
// (paper_universe > 0), otherwise as reviewed papers in the review table.
inline void validate_authorship(const Authorship& authorship, const ReviewTable& reviews,
                                std::size_t paper_universe = 0, const IdMaps* ids = nullptr) {
  detail::ErrorList errors("authorship");
  for (const auto& [author, papers] : authorship) {
    for (PaperId p : papers) {
      const bool known = paper_universe > 0 ? p < paper_universe
                                            : p < reviews.paper_id_bound() && !reviews.reviews_of_paper(p).empty();
      if (!known) {
        errors.add("paper " + detail::paper_label(ids, p) + " (author " + detail::user_label(ids, author) +
                   (paper_universe > 0 ? ") is not in the paper table" : ") has no reviews"));
      }
    }
  }
  errors.raise_if_any();
}

namespace detail {

template <class T>
std::vector<T> dense_by_id(std::map<std::uint32_t, T>& items, const std::string& what) {
  std::vector<T> out;
  out.reserve(items.size());
  ErrorList errors(what);
  std::uint32_t expect = 0;
  for (auto& [id, item] : items) {
    if (id != expect) {
      errors.add("ids must be contiguous from 0; missing " + std::to_string(expect));
      break;
    }
    out.push_back(std::move(item));
    ++expect;
  }
  errors.raise_if_any();
  return out;
}

}  // namespace detail

// Hidden paper qualities, indexed by paper id.
inline std::vector<PaperTruth> load_paper_truth(std::istream& in, const RecordSchema& schema, IdMaps& ids) {
  if (schema.kind != TableKind::papers) throw InvalidArgument("schema is not for papers");
  const auto i_id = schema.index_of("paper_id"), i_q = schema.index_of("true_quality"),
             i_author = schema.index_of("author_id");
  std::map<std::uint32_t, PaperTruth> items;
  detail::ErrorList errors("papers");
  detail::for_each_record(in, schema, errors, [&](std::size_t line, const auto& f) {
    if (!f[i_id] || !f[i_q] || !f[i_author]) {
      errors.add(line, "missing paper_id, true_quality or author_id");
      return;
    }
    const auto q = detail::parse_double(*f[i_q]);
    if (!q) {
      errors.add(line, "unparseable true_quality");
      return;
    }
    try {
      PaperTruth t{ids.papers.intern(*f[i_id]), *q, ids.users.intern(*f[i_author])};
      if (!items.emplace(t.id, t).second) errors.add(line, "duplicate paper " + *f[i_id]);
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
    }
  });
  errors.raise_if_any();
  return detail::dense_by_id(items, "papers");
}

// Hidden agent qualities and bot flags, indexed by user id.
inline std::vector<Agent> load_agent_truth(std::istream& in, const RecordSchema& schema, IdMaps& ids) {
  if (schema.kind != TableKind::agents) throw InvalidArgument("schema is not for agents");
  const auto i_id = schema.index_of("agent_id"), i_q = schema.index_of("true_quality"),
             i_bot = schema.index_of("is_bot");
  std::map<std::uint32_t, Agent> items;
  detail::ErrorList errors("agents");
  detail::for_each_record(in, schema, errors, [&](std::size_t line, const auto& f) {
    if (!f[i_id] || !f[i_q] || !f[i_bot]) {
      errors.add(line, "missing agent_id, true_quality or is_bot");
      return;
    }
    const auto q = detail::parse_double(*f[i_q]);
    const auto bot = detail::parse_bool(*f[i_bot]);
    if (!q || !bot) {
      errors.add(line, "unparseable true_quality or is_bot");
      return;
    }
    try {
      Agent a{ids.users.intern(*f[i_id]), *q, *bot};
      if (!items.emplace(a.id, a).second) errors.add(line, "duplicate agent " + *f[i_id]);
    } catch (const ValidationError& e) {
      errors.add(line, e.what());
    }
  });
  errors.raise_if_any();
  return detail::dense_by_id(items, "agents");
}

// ---- writers (inverse of the loaders under the default schemas) ----

inline void write_review_table(std::ostream& out, const ReviewTable& t, RecordFormat format = RecordFormat::csv,
                               const IdMaps* ids = nullptr) {
  auto schema = RecordSchema::defaults(TableKind::reviews, format);
  detail::RecordWriter w(out, schema);
  for (const auto& r : t.records()) {
    const auto rev = detail::user_label(ids, r.reviewer), pap = detail::paper_label(ids, r.paper);
    w.row({rev, pap, detail::format_double(r.score),
           r.confidence ? std::optional<std::string>(detail::format_double(*r.confidence)) : std::nullopt,
           std::to_string(r.year)},
          {detail::numeric_label(rev), detail::numeric_label(pap), true, true, true});
  }
}

inline void write_rating_table(std::ostream& out, const RatingTable& t, RecordFormat format = RecordFormat::csv,
                               const IdMaps* ids = nullptr) {
  auto schema = RecordSchema::defaults(TableKind::ratings, format);
  detail::RecordWriter w(out, schema);
  for (const auto& r : t.records()) {
    const auto a = detail::user_label(ids, r.rater), b = detail::user_label(ids, r.ratee);
    w.row({a, b, detail::format_double(r.value), std::to_string(r.year)},
          {detail::numeric_label(a), detail::numeric_label(b), true, true});
  }
}

inline void write_authorship(std::ostream& out, const Authorship& a, RecordFormat format = RecordFormat::csv,
                             const IdMaps* ids = nullptr) {
  auto schema = RecordSchema::defaults(TableKind::authorship, format);
  detail::RecordWriter w(out, schema);
  for (const auto& [author, papers] : a) {
    for (PaperId p : papers) {
      const auto u = detail::user_label(ids, author), q = detail::paper_label(ids, p);
      w.row({u, q}, {detail::numeric_label(u), detail::numeric_label(q)});
    }
  }
}

inline void write_paper_truth(std::ostream& out, std::span<const PaperTruth> papers,
                              RecordFormat format = RecordFormat::csv) {
  auto schema = RecordSchema::defaults(TableKind::papers, format);
  detail::RecordWriter w(out, schema);
  for (const auto& p : papers) {
    w.row({std::to_string(p.id), detail::format_double(p.true_quality), std::to_string(p.author)}, {true, true, true});
  }
}

inline void write_agent_truth(std::ostream& out, std::span<const Agent> agents, RecordFormat format = RecordFormat::csv) {
  auto schema = RecordSchema::defaults(TableKind::agents, format);
  detail::RecordWriter w(out, schema);
  for (const auto& a : agents) {
    w.row({std::to_string(a.id), detail::format_double(a.true_quality), a.is_bot ? "1" : "0"}, {true, true, true});
  }
}

// ---- file helpers ----

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return in;
}

template <class T, class Loader>
T load_file(const std::string& path, RecordSchema schema, IdMaps& ids, Loader&& loader) {
  schema.format = format_from_path(path);
  auto in = open_input(path);
  try {
    return loader(in, schema, ids);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace peerrev
