#pragma once

// The `analyze` pipeline: every analysis the available tables support, as flat
// metric records, plus a list of analyses skipped and why.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "peerrev/analysis.hpp"
#include "peerrev/error.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/ingest.hpp"
#include "peerrev/platform.hpp"
#include "peerrev/reviewer_quality.hpp"
#include "peerrev/stats.hpp"
#include "peerrev/tables.hpp"

namespace peerrev {

struct AnalysisInputs {
  ReviewTable reviews;
  std::optional<RatingTable> ratings;
  std::optional<Authorship> authorship;
  std::optional<std::vector<PaperTruth>> papers;
  std::optional<std::vector<Agent>> agents;
};

struct AnalysisOptions {
  std::vector<std::string> analyses;  // empty = all
  ScoringConfig scoring;
  double alpha = 0.18;  // oracle weights need the noise scale
  std::vector<ScoringMethod> methods = all_scoring_methods();
};

struct SkippedAnalysis {
  std::string analysis;
  std::string reason;
};

struct AnalysisReport {
  std::vector<MetricRecord> metrics;
  std::vector<SkippedAnalysis> skipped;
};

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> names = {"pairwise",     "normalized", "confidence", "authorship",
                                                 "reviewer_msd", "ratings",    "estimators", "bots"};
  return names;
}

namespace detail {

inline MetricRecord metric(std::string name, const CorrelationResult& c, std::string group = "") {
  return MetricRecord{std::move(name), c.r, c.stderr_r, c.n, std::move(group)};
}

inline MetricRecord metric(std::string name, double v, std::size_t n, std::string group = "",
                           std::optional<double> se = std::nullopt) {
  return MetricRecord{std::move(name), v, se, n, std::move(group)};
}

inline std::string fmt_group(const PercentileGroup& g) {
  return std::to_string(std::lround(g.lo * 100)) + "-" + std::to_string(std::lround(g.hi * 100)) + "%";
}

inline void run_pairwise(const AnalysisInputs& in, AnalysisReport& out) {
  out.metrics.push_back(metric("pairwise_r", pairwise_reviewer_correlation(in.reviews), "raw"));
}

inline void run_normalized(const AnalysisInputs& in, AnalysisReport& out) {
  for (auto m : {Normalization::zscore, Normalization::rank, Normalization::mean_removal,
                 Normalization::distribution_inversion}) {
    out.metrics.push_back(
        metric("pairwise_r", pairwise_reviewer_correlation(normalize_scores(in.reviews, m).table), to_string(m)));
  }
}

inline void run_confidence(const AnalysisInputs& in, AnalysisReport& out) {
  if (!in.reviews.has_confidence()) throw InsufficientData("reviews carry no confidence column");
  const auto strat = confidence_stratified_correlation(in.reviews);
  for (const auto& s : strat.strata) {
    const auto level = detail::format_double(s.level);
    out.metrics.push_back(metric("confidence_pairwise_r", s.correlation, level));
    out.metrics.push_back(metric("confidence_review_share", s.review_share, s.correlation.n, level));
  }
  out.metrics.push_back(metric("confidence_score_r", confidence_score_correlation(in.reviews)));
}

inline void run_authorship(const AnalysisInputs& in, AnalysisReport& out) {
  if (!in.authorship) throw InsufficientData("no authorship table");
  out.metrics.push_back(metric("author_vs_reviewer_r", author_vs_reviewer_quality(in.reviews, *in.authorship)));
  const auto groups = default_percentile_groups();
  for (const auto& g : percentile_group_stats(in.reviews, *in.authorship, groups)) {
    const auto label = fmt_group(g.group);
    out.metrics.push_back(metric("group_mean_msd", g.mean_msd, g.n_members, label, g.sem_msd));
    if (g.pair_correlation) out.metrics.push_back(metric("group_pairwise_r", *g.pair_correlation, label));
  }
}

inline void run_reviewer_msd(const AnalysisInputs& in, AnalysisReport& out) {
  const CasDeviationIndex idx(in.reviews);
  std::vector<double> msds;
  for (ReviewerId r : in.reviews.reviewers()) {
    if (auto m = idx.msd_excluding(r)) msds.push_back(*m);
  }
  if (msds.empty()) throw InsufficientData("no reviewer shares a paper with another reviewer");
  const double se = msds.size() > 1 ? std::sqrt(stats::variance(msds) / static_cast<double>(msds.size())) : 0.0;
  out.metrics.push_back(metric("reviewer_msd_mean", stats::mean(msds), msds.size(), "", se));
  out.metrics.push_back(metric("reviewer_msd_median", stats::median(msds), msds.size()));
  out.metrics.push_back(metric("pooled_msd", *idx.pooled_msd(), in.reviews.size()));
}

inline void run_ratings(const AnalysisInputs& in, AnalysisReport& out) {
  if (!in.ratings) throw InsufficientData("no ratings table");
  const auto q = rating_based_quality(*in.ratings);
  if (q.empty()) throw InsufficientData("ratings table is empty");
  const auto v = rating_values(q);
  const double se = v.size() > 1 ? std::sqrt(stats::variance(v) / static_cast<double>(v.size())) : 0.0;
  out.metrics.push_back(metric("rating_quality_mean", stats::mean(v), v.size(), "", se));
  out.metrics.push_back(metric("ratings_binary", in.ratings->is_binary() ? 1.0 : 0.0, in.ratings->size()));
}

inline bool needs_agents(ScoringMethod m) {
  return m == ScoringMethod::oracle || m == ScoringMethod::oracle_ungated;
}

inline void run_estimators(const AnalysisInputs& in, const AnalysisOptions& opt, AnalysisReport& out) {
  if (!in.ratings) throw InsufficientData("no ratings table");
  if (!in.papers) throw InsufficientData("no paper truth table");
  static const std::vector<Agent> no_agents;
  const PlatformView view{&in.reviews, &*in.ratings, in.agents ? std::span<const Agent>(*in.agents) : no_agents,
                          *in.papers, opt.alpha};
  for (ScoringMethod m : opt.methods) {
    const auto group = to_string(m);
    if (needs_agents(m) && !in.agents) {
      out.skipped.push_back({"estimators/" + group, "no agent truth table"});
      continue;
    }
    const auto mm = evaluate_method(view, m, opt.scoring);
    if (!mm.note.empty()) {
      out.skipped.push_back({"estimators/" + group, mm.note});
      continue;
    }
    if (mm.correlation) {
      const auto c = stats::correlation_result(*mm.correlation, mm.n_published);
      out.metrics.push_back(metric("estimator_r", c, group));
    }
    out.metrics.push_back(metric("coverage", mm.coverage, in.papers->size(), group));
  }
}

inline void run_bots(const AnalysisInputs& in, AnalysisReport& out) {
  if (!in.ratings) throw InsufficientData("no ratings table");
  if (!in.agents) throw InsufficientData("no agent truth table");
  const auto split = bot_quality_split(*in.ratings, *in.agents);
  if (!split.balanced_accuracy) throw InsufficientData("need rated bots and rated humans");
  out.metrics.push_back(metric("bot_balanced_accuracy", *split.balanced_accuracy, split.bots.size() + split.humans.size()));
  out.metrics.push_back(metric("rated_bots", static_cast<double>(split.bots.size()), split.bots.size()));
  out.metrics.push_back(metric("rated_humans", static_cast<double>(split.humans.size()), split.humans.size()));
}

}  // namespace detail

inline AnalysisReport analyze(const AnalysisInputs& in, const AnalysisOptions& opt = {}) {
  const auto& known = known_analyses();
  std::vector<std::string> wanted = opt.analyses.empty() ? known : opt.analyses;
  for (const auto& a : wanted) {
    if (std::find(known.begin(), known.end(), a) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      throw InvalidArgument("unknown analysis '" + a + "' (known: " + list + ")");
    }
  }
  if (in.authorship) validate_authorship(*in.authorship, in.reviews, in.papers ? in.papers->size() : 0);
  AnalysisReport out;
  for (const auto& a : wanted) {
    try {
      if (a == "pairwise") detail::run_pairwise(in, out);
      if (a == "normalized") detail::run_normalized(in, out);
      if (a == "confidence") detail::run_confidence(in, out);
      if (a == "authorship") detail::run_authorship(in, out);
      if (a == "reviewer_msd") detail::run_reviewer_msd(in, out);
      if (a == "ratings") detail::run_ratings(in, out);
      if (a == "estimators") detail::run_estimators(in, opt, out);
      if (a == "bots") detail::run_bots(in, out);
    } catch (const InsufficientData& e) {
      out.skipped.push_back({a, e.what()});
    }
  }
  return out;
}

}  // namespace peerrev
