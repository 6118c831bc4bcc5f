#pragma once

// JSON forms of the configuration structs. Readers start from the defaults,
// override only the keys present, and reject keys they do not know; writers
// emit every field so a written config is fully resolved.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peerrev/calibration.hpp"
#include "peerrev/error.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/platform.hpp"
#include "peerrev/reviewer_quality.hpp"

namespace peerrev {

using Json = nlohmann::json;

namespace detail {

inline void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
}

inline void reject_unknown_keys(const Json& j, const std::string& where, std::initializer_list<const char*> known) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidArgument(where + ": unknown key '" + key + "'");
  }
}

// Reads j[key] into out when present, with a type check naming the key.
template <class T>
void read_key(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw InvalidArgument("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw InvalidArgument("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<std::int64_t>() >= 0)) {
        throw InvalidArgument("");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw InvalidArgument("");
    }
    out = it->template get<T>();
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": bad value for '" + key + "': " + it->dump());
  }
}

}  // namespace detail

// ---- QualityDist ----

inline Json to_json(const QualityDist& d) {
  if (d.kind == QualityDist::Kind::uniform) return Json{{"kind", "uniform"}};
  return Json{{"kind", "beta"}, {"a", d.a}, {"b", d.b}};
}

inline QualityDist quality_dist_from_json(const Json& j, const std::string& where) {
  detail::reject_unknown_keys(j, where, {"kind", "a", "b"});
  std::string kind = "uniform";
  detail::read_key(j, "kind", kind, where);
  QualityDist d;
  if (kind == "uniform") {
    if (j.contains("a") || j.contains("b")) throw InvalidArgument(where + ": uniform takes no parameters");
    return d;
  }
  if (kind != "beta") throw InvalidArgument(where + ": unknown distribution '" + kind + "'");
  d.kind = QualityDist::Kind::beta;
  detail::read_key(j, "a", d.a, where);
  detail::read_key(j, "b", d.b, where);
  d.validate();
  return d;
}

// ---- WorldConfig ----

inline Json to_json(const WorldConfig& w) {
  return Json{{"alpha", w.alpha},
              {"bot_fraction", w.bot_fraction},
              {"paper_quality", to_json(w.paper_quality)},
              {"reviewer_quality", to_json(w.reviewer_quality)},
              {"reviewer_quality_floor", w.reviewer_quality_floor},
              {"clamp_mode", to_string(w.clamp_mode)},
              {"seed", w.seed}};
}

inline WorldConfig world_config_from_json(const Json& j, WorldConfig w = {}) {
  const std::string where = "world";
  detail::reject_unknown_keys(
      j, where, {"alpha", "bot_fraction", "paper_quality", "reviewer_quality", "reviewer_quality_floor", "clamp_mode", "seed"});
  detail::read_key(j, "alpha", w.alpha, where);
  detail::read_key(j, "bot_fraction", w.bot_fraction, where);
  detail::read_key(j, "reviewer_quality_floor", w.reviewer_quality_floor, where);
  detail::read_key(j, "seed", w.seed, where);
  if (j.contains("paper_quality")) w.paper_quality = quality_dist_from_json(j["paper_quality"], "world.paper_quality");
  if (j.contains("reviewer_quality")) {
    w.reviewer_quality = quality_dist_from_json(j["reviewer_quality"], "world.reviewer_quality");
  }
  if (j.contains("clamp_mode")) {
    std::string m;
    detail::read_key(j, "clamp_mode", m, where);
    w.clamp_mode = clamp_mode_from_string(m);
  }
  w.validate();
  return w;
}

// ---- ScoringConfig ----

inline Json to_json(const QualityConfig& q) {
  return Json{{"sigma_floor", q.sigma_floor},
              {"n_bins", q.n_bins},
              {"strict_history", q.strict_history},
              {"min_author_weight", q.min_author_weight}};
}

inline QualityConfig quality_config_from_json(const Json& j, QualityConfig q = {}) {
  const std::string where = "scoring.quality";
  detail::reject_unknown_keys(j, where, {"sigma_floor", "n_bins", "strict_history", "min_author_weight"});
  detail::read_key(j, "sigma_floor", q.sigma_floor, where);
  detail::read_key(j, "n_bins", q.n_bins, where);
  detail::read_key(j, "strict_history", q.strict_history, where);
  detail::read_key(j, "min_author_weight", q.min_author_weight, where);
  return q;
}

inline Json to_json(const ScoringConfig& s) {
  return Json{{"sigma_max", s.certainty.sigma_max},
              {"quality", to_json(s.quality)},
              {"top_reviewer_pct", s.top_reviewer_pct},
              {"top_paper_pct", s.top_paper_pct},
              {"threshold_cutoff", s.threshold_cutoff}};
}

inline ScoringConfig scoring_config_from_json(const Json& j, ScoringConfig s = {}) {
  const std::string where = "scoring";
  detail::reject_unknown_keys(j, where, {"sigma_max", "quality", "top_reviewer_pct", "top_paper_pct", "threshold_cutoff"});
  double sigma_max = s.certainty.sigma_max;
  detail::read_key(j, "sigma_max", sigma_max, where);
  s.certainty = CertaintyPolicy(sigma_max);
  if (j.contains("quality")) s.quality = quality_config_from_json(j["quality"], s.quality);
  detail::read_key(j, "top_reviewer_pct", s.top_reviewer_pct, where);
  detail::read_key(j, "top_paper_pct", s.top_paper_pct, where);
  detail::read_key(j, "threshold_cutoff", s.threshold_cutoff, where);
  s.validate();
  return s;
}

// ---- SimConfig ----

inline Json to_json(const SimConfig& c) {
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  return Json{{"years", c.years},
              {"initial_users", c.initial_users},
              {"initial_papers_per_user", c.initial_papers_per_user},
              {"joins_per_year", c.joins_per_year},
              {"churn_fraction", c.churn_fraction},
              {"papers_per_user_year", c.papers_per_user_year},
              {"reviews_per_user_year", c.reviews_per_user_year},
              {"ratings_per_user_year", c.ratings_per_user_year},
              {"binary_ratings", c.binary_ratings},
              {"binary_threshold", c.binary_threshold},
              {"warm_start", c.warm_start},
              {"allocation", to_string(c.allocation)},
              {"review_cap", c.review_cap ? Json(*c.review_cap) : Json(nullptr)},
              {"prior_variance", c.prior_variance},
              {"scoring", to_json(c.scoring)},
              {"world", to_json(c.world)},
              {"methods", methods}};
}

inline SimConfig sim_config_from_json(const Json& j, SimConfig c = {}) {
  const std::string where = "simulation";
  detail::reject_unknown_keys(j, where,
                              {"years", "initial_users", "initial_papers_per_user", "joins_per_year", "churn_fraction",
                               "papers_per_user_year", "reviews_per_user_year", "ratings_per_user_year",
                               "binary_ratings", "binary_threshold", "warm_start", "allocation", "review_cap",
                               "prior_variance", "scoring", "world", "methods"});
  detail::read_key(j, "years", c.years, where);
  detail::read_key(j, "initial_users", c.initial_users, where);
  detail::read_key(j, "initial_papers_per_user", c.initial_papers_per_user, where);
  detail::read_key(j, "joins_per_year", c.joins_per_year, where);
  detail::read_key(j, "churn_fraction", c.churn_fraction, where);
  detail::read_key(j, "papers_per_user_year", c.papers_per_user_year, where);
  detail::read_key(j, "reviews_per_user_year", c.reviews_per_user_year, where);
  detail::read_key(j, "ratings_per_user_year", c.ratings_per_user_year, where);
  detail::read_key(j, "binary_ratings", c.binary_ratings, where);
  detail::read_key(j, "binary_threshold", c.binary_threshold, where);
  detail::read_key(j, "warm_start", c.warm_start, where);
  detail::read_key(j, "prior_variance", c.prior_variance, where);
  if (j.contains("allocation")) {
    std::string a;
    detail::read_key(j, "allocation", a, where);
    c.allocation = allocation_policy_from_string(a);
  }
  if (j.contains("review_cap")) {
    if (j["review_cap"].is_null()) {
      c.review_cap.reset();
    } else {
      std::size_t cap = 0;
      detail::read_key(j, "review_cap", cap, where);
      c.review_cap = cap;
    }
  }
  if (j.contains("scoring")) c.scoring = scoring_config_from_json(j["scoring"], c.scoring);
  if (j.contains("world")) c.world = world_config_from_json(j["world"], c.world);
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw InvalidArgument(where + ": methods must be an array");
    c.methods.clear();
    for (const auto& m : j["methods"]) {
      if (!m.is_string()) throw InvalidArgument(where + ": method names must be strings");
      c.methods.push_back(scoring_method_from_string(m.get<std::string>()));
    }
  }
  c.validate();
  return c;
}

// ---- calibration ----

inline Json to_json(const ConferenceShape& s) {
  return Json{{"n_reviewers", s.n_reviewers},
              {"n_papers", s.n_papers},
              {"reviews_per_paper", s.reviews_per_paper},
              {"with_confidence", s.with_confidence}};
}

inline ConferenceShape conference_shape_from_json(const Json& j, ConferenceShape s = {}) {
  const std::string where = "calibration.shape";
  detail::reject_unknown_keys(j, where, {"n_reviewers", "n_papers", "reviews_per_paper", "with_confidence"});
  detail::read_key(j, "n_reviewers", s.n_reviewers, where);
  detail::read_key(j, "n_papers", s.n_papers, where);
  detail::read_key(j, "reviews_per_paper", s.reviews_per_paper, where);
  detail::read_key(j, "with_confidence", s.with_confidence, where);
  return s;
}

inline Json to_json(const CalibrationOptions& o) {
  return Json{{"shape", to_json(o.shape)},      {"alpha_lo", o.alpha_lo},
              {"alpha_hi", o.alpha_hi},         {"tolerance", o.tolerance},
              {"max_iterations", o.max_iterations}, {"replicates", o.replicates}};
}

inline CalibrationOptions calibration_options_from_json(const Json& j, CalibrationOptions o = {}) {
  const std::string where = "calibration";
  detail::reject_unknown_keys(j, where, {"shape", "alpha_lo", "alpha_hi", "tolerance", "max_iterations", "replicates"});
  if (j.contains("shape")) o.shape = conference_shape_from_json(j["shape"], o.shape);
  detail::read_key(j, "alpha_lo", o.alpha_lo, where);
  detail::read_key(j, "alpha_hi", o.alpha_hi, where);
  detail::read_key(j, "tolerance", o.tolerance, where);
  detail::read_key(j, "max_iterations", o.max_iterations, where);
  detail::read_key(j, "replicates", o.replicates, where);
  return o;
}

}  // namespace peerrev
