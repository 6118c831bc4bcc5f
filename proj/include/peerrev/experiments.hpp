#pragma once

// Scenario presets behind `reproduce`, and the replicate runner they share.
// Every preset emits flat tables; replicates are paired across conditions by
// sharing (seed, replicate index).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "peerrev/analysis.hpp"
#include "peerrev/error.hpp"
#include "peerrev/estimator.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/platform.hpp"
#include "peerrev/reviewer_quality.hpp"
#include "peerrev/rng.hpp"
#include "peerrev/stats.hpp"

namespace peerrev {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

inline Cell cell(std::optional<double> x) { return x ? Cell{*x} : Cell{}; }
inline Cell cell(double x) { return Cell{x}; }
inline Cell cell(std::size_t x) { return Cell{static_cast<std::int64_t>(x)}; }
inline Cell cell(std::string s) { return Cell{std::move(s)}; }

struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw Error("row width does not match table " + name);
    rows.push_back(std::move(row));
  }
};

struct ExperimentOptions {
  std::uint64_t seed = 7;
  std::size_t replicates = 20;
  std::size_t jobs = 1;
};

// Runs fn(0..n-1) on up to `jobs` threads; results come back in index order.
template <class Fn>
auto run_replicates(std::size_t n, std::size_t jobs, Fn&& fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---- scenario configurations ----

// Open platform of a fixed population: 500 users with one paper each in the
// first year and one more per later year; no joins or exits.
inline SimConfig fig4_config(double bot_fraction, std::size_t years = 5, std::size_t reviews_per_user_year = 3) {
  SimConfig c;
  c.years = years;
  c.initial_users = 500;
  c.initial_papers_per_user = 1;
  c.papers_per_user_year = 1;
  c.joins_per_year = 0;
  c.churn_fraction = 0.0;
  c.reviews_per_user_year = reviews_per_user_year;
  c.ratings_per_user_year = 10;
  c.world.bot_fraction = bot_fraction;
  return c;
}

// Growing platform with onboarding, churn and content brought at join time.
inline SimConfig fig6_config(bool warm_start, double bot_fraction = 0.8) {
  SimConfig c;
  c.world.bot_fraction = bot_fraction;
  c.warm_start = warm_start;
  c.methods = {ScoringMethod::simple_mean, ScoringMethod::bayes_binned, ScoringMethod::oracle};
  return c;
}

enum class RatingCondition { continuous, binary, binary_5x };

inline std::string to_string(RatingCondition c) {
  switch (c) {
    case RatingCondition::continuous: return "continuous";
    case RatingCondition::binary: return "binary";
    case RatingCondition::binary_5x: return "binary_5x";
  }
  return "?";
}

inline SimConfig fig7_config(RatingCondition cond) {
  SimConfig c = fig4_config(0.5);
  c.methods = {ScoringMethod::simple_mean, ScoringMethod::bayes_binned};
  c.binary_ratings = cond != RatingCondition::continuous;
  if (cond == RatingCondition::binary_5x) c.ratings_per_user_year = 50;
  return c;
}

inline SimConfig fig5_config(AllocationPolicy policy) {
  SimConfig c = fig4_config(0.5);
  c.allocation = policy;
  c.methods = {ScoringMethod::simple_mean, ScoringMethod::bayes_binned};
  return c;
}

// Mean over years of a method's correlation; nullopt if any year lacks one.
inline std::optional<double> run_average_correlation(const SimReport& rep, ScoringMethod m) {
  double s = 0.0;
  for (const auto& y : rep.years) {
    const auto& c = y.metrics(m).correlation;
    if (!c) return std::nullopt;
    s += *c;
  }
  return s / static_cast<double>(rep.years.size());
}

// ---- simple unbounded model (Gaussian scores, known or estimated spreads) ----

struct SimpleModelResult {
  double msd_simple_mean = 0.0;
  double msd_bayes_oracle = 0.0;
  double msd_bayes_empirical = 0.0;
  std::size_t n_papers = 0;
};

struct SimpleModelConfig {
  std::size_t n_papers = 1000;
  std::size_t n_reviewers = 300;
  std::size_t reviews_per_paper = 3;
  std::size_t history_k = 5;  // earlier reviews behind each empirical sigma
  WorldConfig world;
};

// Scores are q + sigma_i * z with sigma_i = alpha / p_i and no bounds. The
// empirical sigma comes from k earlier reviews of papers whose community score
// is taken as exact.
inline SimpleModelResult simple_model_trial(const SimpleModelConfig& cfg, std::uint64_t replicate) {
  cfg.world.validate();
  if (cfg.reviews_per_paper == 0 || cfg.reviews_per_paper > cfg.n_reviewers) {
    throw InvalidArgument("reviews_per_paper must lie in [1, n_reviewers]");
  }
  if (cfg.history_k == 0 || cfg.n_papers == 0) throw InvalidArgument("n_papers and history_k must be positive");
  Rng rng = make_stream(cfg.world.seed, replicate, 3);
  std::vector<double> sigma(cfg.n_reviewers), sigma_hat(cfg.n_reviewers);
  QualityConfig qc;
  for (std::size_t i = 0; i < cfg.n_reviewers; ++i) {
    sigma[i] = cfg.world.alpha / sample_reviewer_quality(cfg.world, rng);
    double ss = 0.0;
    for (std::size_t k = 0; k < cfg.history_k; ++k) {
      const double d = sigma[i] * standard_normal(rng);
      ss += d * d;
    }
    sigma_hat[i] = floored_sigma(ss / static_cast<double>(cfg.history_k), qc);
  }
  SimpleModelResult res;
  res.n_papers = cfg.n_papers;
  std::vector<std::size_t> ids(cfg.n_reviewers);
  std::vector<ScoreSample> scores(cfg.reviews_per_paper);
  std::vector<double> s_true(cfg.reviews_per_paper), s_emp(cfg.reviews_per_paper);
  for (std::size_t j = 0; j < cfg.n_papers; ++j) {
    const double q = cfg.world.paper_quality.sample(rng);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    for (std::size_t k = 0; k < cfg.reviews_per_paper; ++k) {
      std::swap(ids[k], ids[k + uniform_index(rng, cfg.n_reviewers - k)]);
      const std::size_t i = ids[k];
      scores[k] = {q + sigma[i] * standard_normal(rng), static_cast<ReviewerId>(i)};
      s_true[k] = sigma[i];
      s_emp[k] = sigma_hat[i];
    }
    const auto sq = [q](double x) { return (x - q) * (x - q); };
    res.msd_simple_mean += sq(simple_mean(scores).mean);
    res.msd_bayes_oracle += sq(inverse_variance_mean(scores, s_true).mean);
    res.msd_bayes_empirical += sq(inverse_variance_mean(scores, s_emp).mean);
  }
  const auto n = static_cast<double>(cfg.n_papers);
  res.msd_simple_mean /= n;
  res.msd_bayes_oracle /= n;
  res.msd_bayes_empirical /= n;
  return res;
}

// ---- conference-style analyses ----

struct WeightingComparison {
  double msd_simple_mean = 0.0;
  double msd_author_weighted = 0.0;
  double msd_reviewer_weighted = 0.0;
  std::size_t n_papers = 0;
};

// Per paper: simple mean, author-quality weights, and reviewer-quality weights
// estimated with that paper left out. MSD is against the true paper quality.
inline WeightingComparison compare_weightings(const Conference& c, const QualityConfig& qc = {}) {
  const auto& t = c.reviews;
  const auto aw = author_quality_weights(t, c.authorship, qc);
  const CasDeviationIndex idx(t);
  const auto pooled = idx.pooled_msd();
  if (!pooled) throw InsufficientData("no paper has two reviews");
  WeightingComparison out;
  std::vector<ScoreSample> samples;
  std::vector<double> w_author, s_rev;
  for (PaperId p : t.papers()) {
    samples.clear();
    w_author.clear();
    s_rev.clear();
    for (std::size_t i : t.reviews_of_paper(p)) {
      const auto& r = t[i];
      samples.push_back({r.score, r.reviewer});
      w_author.push_back(aw.at(r.reviewer));
      s_rev.push_back(floored_sigma(idx.msd_excluding(r.reviewer, p).value_or(*pooled), qc));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      num += w_author[k] * samples[k].value;
      den += w_author[k];
    }
    const double q = c.world.papers[p].true_quality;
    const auto sq = [q](double x) { return (x - q) * (x - q); };
    out.msd_simple_mean += sq(simple_mean(samples).mean);
    out.msd_author_weighted += sq(num / den);
    out.msd_reviewer_weighted += sq(inverse_variance_mean(samples, s_rev).mean);
    ++out.n_papers;
  }
  const auto n = static_cast<double>(out.n_papers);
  out.msd_simple_mean /= n;
  out.msd_author_weighted /= n;
  out.msd_reviewer_weighted /= n;
  return out;
}

// Squared deviation from the leave-one-out CAS on each paper, grouped by
// quintile of the reviewer's MSD estimated with that paper left out.
inline std::vector<double> withheld_deviation_by_quality(const ReviewTable& t, std::size_t groups = 5) {
  const CasDeviationIndex idx(t);
  std::vector<std::pair<double, double>> items;  // (estimated msd, withheld squared deviation)
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& r = t[i];
    const double d = idx.squared_deviation(i);
    if (std::isnan(d)) continue;
    const auto est = idx.msd_excluding(r.reviewer, r.paper);
    if (!est) continue;
    items.emplace_back(*est, d);
  }
  if (items.size() < groups) throw InsufficientData("too few withheld reviews");
  std::sort(items.begin(), items.end());
  std::vector<double> out(groups, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * items.size() / groups, hi = (g + 1) * items.size() / groups;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += items[k].second;
    out[g] = s / static_cast<double>(hi - lo);
  }
  return out;
}

// ---- presets ----

struct ExperimentOutput {
  std::string id;
  std::vector<ResultTable> tables;
};

inline const std::vector<std::string>& known_figures() {
  static const std::vector<std::string> ids = {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "suppfig4"};
  return ids;
}

namespace detail {

inline WorldConfig seeded_world(const ExperimentOptions& o) {
  WorldConfig w;
  w.seed = o.seed;
  return w;
}

inline std::string fmt_fraction(double x) {
  const auto pct = static_cast<long>(std::lround(x * 100.0));
  return std::to_string(pct) + "%";
}

// Median per key over replicate values, rendered as a summary table.
struct Summary {
  std::map<std::vector<std::string>, std::vector<double>> values;
  void add(std::vector<std::string> key, std::optional<double> v) {
    if (v) values[std::move(key)].push_back(*v);
  }
  ResultTable table(std::string name, std::vector<std::string> key_columns) const {
    ResultTable t{std::move(name), std::move(key_columns), {}};
    t.columns.insert(t.columns.end(), {"median", "mean", "sd", "n"});
    for (const auto& [key, vals] : values) {
      std::vector<Cell> row(key.begin(), key.end());
      row.push_back(stats::median(vals));
      row.push_back(stats::mean(vals));
      row.push_back(vals.size() > 1 ? cell(std::sqrt(stats::variance(vals))) : Cell{});
      row.push_back(cell(vals.size()));
      t.add(std::move(row));
    }
    return t;
  }
};

inline ResultTable paired_tests(std::string name) {
  return ResultTable{std::move(name), {"comparison", "wins", "n", "sign_test_p", "paired_t_p"}, {}};
}

inline void add_paired(ResultTable& t, const std::string& label, const std::vector<double>& diffs) {
  std::size_t wins = 0;
  for (double d : diffs) wins += d > 0.0 ? 1 : 0;
  t.add({label, cell(wins), cell(diffs.size()), stats::sign_test_p(wins, diffs.size()),
         diffs.size() > 1 ? cell(stats::paired_t_p(diffs)) : Cell{}});
}

}  // namespace detail

// Reviewer agreement on conference-shaped tables.
inline ExperimentOutput reproduce_fig1(const ExperimentOptions& o) {
  ConferenceShape shape;
  shape.with_confidence = true;
  const auto world = detail::seeded_world(o);
  struct Rep {
    std::vector<std::pair<std::string, CorrelationResult>> pairwise;
    StratifiedCorrelation strata;
    std::optional<CorrelationResult> conf_score;
  };
  const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) {
    const auto conf = make_conference(world, shape, k);
    Rep r;
    r.pairwise.emplace_back("raw", pairwise_reviewer_correlation(conf.reviews));
    for (auto m : {Normalization::zscore, Normalization::rank, Normalization::mean_removal,
                   Normalization::distribution_inversion}) {
      r.pairwise.emplace_back(to_string(m), pairwise_reviewer_correlation(normalize_scores(conf.reviews, m).table));
    }
    r.strata = confidence_stratified_correlation(conf.reviews);
    r.conf_score = confidence_score_correlation(conf.reviews);
    return r;
  });
  ResultTable pw{"fig1_pairwise", {"replicate", "normalization", "r", "stderr", "n_pairs", "p_value"}, {}};
  ResultTable cs{"fig1_confidence", {"replicate", "confidence", "r", "stderr", "n_pairs", "review_share"}, {}};
  ResultTable sc{"fig1_confidence_vs_score", {"replicate", "r", "stderr", "n"}, {}};
  detail::Summary sum;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    for (const auto& [name, c] : reps[k].pairwise) {
      pw.add({cell(k), name, c.r, c.stderr_r, cell(c.n), c.p_value});
      sum.add({"pairwise_r", name}, c.r);
    }
    for (const auto& s : reps[k].strata.strata) {
      cs.add({cell(k), s.level, s.correlation.r, s.correlation.stderr_r,
              cell(s.correlation.n), s.review_share});
      sum.add({"confidence_r", std::to_string(std::lround(s.level))}, s.correlation.r);
    }
    if (reps[k].conf_score) sc.add({cell(k), reps[k].conf_score->r, reps[k].conf_score->stderr_r, cell(reps[k].conf_score->n)});
  }
  return {"fig1", {pw, cs, sc, sum.table("fig1_summary", {"metric", "group"})}};
}

// Simple model: oracle-sigma Bayes, 5-review empirical Bayes, simple mean.
inline ExperimentOutput reproduce_fig2(const ExperimentOptions& o) {
  SimpleModelConfig cfg;
  cfg.world = detail::seeded_world(o);
  const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return simple_model_trial(cfg, k); });
  ResultTable t{"fig2_msd", {"replicate", "oracle_bayes", "empirical_bayes", "simple_mean", "n_papers"}, {}};
  auto tests = detail::paired_tests("fig2_tests");
  std::vector<double> emp_vs_mean, oracle_vs_emp;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& r = reps[k];
    t.add({cell(k), r.msd_bayes_oracle, r.msd_bayes_empirical, r.msd_simple_mean, cell(r.n_papers)});
    emp_vs_mean.push_back(r.msd_simple_mean - r.msd_bayes_empirical);
    oracle_vs_emp.push_back(r.msd_bayes_empirical - r.msd_bayes_oracle);
  }
  detail::add_paired(tests, "empirical_bayes_below_simple_mean", emp_vs_mean);
  detail::add_paired(tests, "oracle_bayes_below_empirical_bayes", oracle_vs_emp);
  return {"fig2", {t, tests}};
}

// Author quality versus reviewer quality, and both as weights.
inline ExperimentOutput reproduce_fig3(const ExperimentOptions& o) {
  const auto world = detail::seeded_world(o);
  struct Rep {
    CorrelationResult author_vs_reviewer;
    WeightingComparison weights;
    std::vector<double> withheld;
    std::vector<GroupStats> groups;
  };
  const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) {
    const auto conf = make_conference(world, ConferenceShape{}, k);
    return Rep{author_vs_reviewer_quality(conf.reviews, conf.authorship), compare_weightings(conf),
               withheld_deviation_by_quality(conf.reviews),
               percentile_group_stats(conf.reviews, conf.authorship, default_percentile_groups())};
  });
  ResultTable corr{"fig3_author_vs_reviewer", {"replicate", "r", "stderr", "n", "p_value"}, {}};
  ResultTable w{"fig3_weighting_msd", {"replicate", "simple_mean", "author_weighted", "reviewer_weighted", "n_papers"}, {}};
  ResultTable wd{"fig3_withheld_deviation", {"replicate", "quality_quintile", "mean_squared_deviation"}, {}};
  ResultTable g{"fig3_percentile_groups", {"replicate", "lo", "hi", "n_members", "mean_msd", "pair_r", "n_pairs"}, {}};
  auto tests = detail::paired_tests("fig3_tests");
  std::vector<double> author_gain, reviewer_gain;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& r = reps[k];
    corr.add({cell(k), r.author_vs_reviewer.r, r.author_vs_reviewer.stderr_r, cell(r.author_vs_reviewer.n),
              r.author_vs_reviewer.p_value});
    w.add({cell(k), r.weights.msd_simple_mean, r.weights.msd_author_weighted, r.weights.msd_reviewer_weighted,
           cell(r.weights.n_papers)});
    author_gain.push_back(r.weights.msd_simple_mean - r.weights.msd_author_weighted);
    reviewer_gain.push_back(r.weights.msd_simple_mean - r.weights.msd_reviewer_weighted);
    for (std::size_t q = 0; q < r.withheld.size(); ++q) wd.add({cell(k), cell(q + 1), r.withheld[q]});
    for (const auto& gs : r.groups) {
      g.add({cell(k), gs.group.lo, gs.group.hi, cell(gs.n_members), gs.mean_msd,
             gs.pair_correlation ? Cell{gs.pair_correlation->r} : Cell{}, cell(gs.n_pairs)});
    }
  }
  detail::add_paired(tests, "author_weighted_below_simple_mean", author_gain);
  detail::add_paired(tests, "reviewer_weighted_below_simple_mean", reviewer_gain);
  return {"fig3", {corr, w, wd, g, tests}};
}

// Platform estimators against truth across bot fractions, per year; plus the
// reviews-per-paper sweep for the history-based (direct S.D.) weighting.
inline ExperimentOutput reproduce_fig4(const ExperimentOptions& o) {
  const std::vector<double> fractions = {0.1, 0.5, 0.8};
  ResultTable m{"fig4_metrics", {"bot_fraction", "replicate", "year", "method", "correlation", "coverage", "n_published"}, {}};
  ResultTable q{"fig4_quality_split",
                {"bot_fraction", "replicate", "year", "bin_lo", "bin_hi", "bots", "humans"}, {}};
  ResultTable sep{"fig4_bot_separability", {"bot_fraction", "replicate", "year", "balanced_accuracy"}, {}};
  ResultTable sweep{"fig4_reviews_per_paper", {"reviews_per_paper", "replicate", "method", "correlation", "coverage"}, {}};
  detail::Summary sum;
  for (double bf : fractions) {
    auto cfg = fig4_config(bf);
    cfg.world.seed = o.seed;
    const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    const auto label = detail::fmt_fraction(bf);
    for (std::size_t k = 0; k < reps.size(); ++k) {
      for (const auto& y : reps[k].years) {
        for (const auto& mm : y.methods) {
          m.add({bf, cell(k), cell(std::size_t{y.year}), to_string(mm.method), cell(mm.correlation), mm.coverage,
                 cell(mm.n_published)});
          sum.add({label, std::to_string(y.year), to_string(mm.method), "correlation"}, mm.correlation);
          sum.add({label, std::to_string(y.year), to_string(mm.method), "coverage"}, mm.coverage);
        }
        sep.add({bf, cell(k), cell(std::size_t{y.year}), cell(y.bot_split.balanced_accuracy)});
        sum.add({label, std::to_string(y.year), "reviewer_quality", "bot_separability"}, y.bot_split.balanced_accuracy);
      }
      const auto& last = reps[k].years.back();
      for (std::size_t b = 0; b < kQualityHistogramBins; ++b) {
        q.add({bf, cell(k), cell(std::size_t{last.year}), static_cast<double>(b) / kQualityHistogramBins,
               static_cast<double>(b + 1) / kQualityHistogramBins, cell(last.bot_split.bot_histogram[b]),
               cell(last.bot_split.human_histogram[b])});
      }
    }
  }
  for (std::size_t rpp : {std::size_t{3}, std::size_t{9}, std::size_t{20}}) {
    auto cfg = fig4_config(0.5, 1, rpp);
    cfg.methods = {ScoringMethod::simple_mean, ScoringMethod::bayes_binned, ScoringMethod::bayes_direct_sd};
    cfg.world.seed = o.seed;
    const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    for (std::size_t k = 0; k < reps.size(); ++k) {
      for (const auto& mm : reps[k].years.front().methods) {
        sweep.add({cell(rpp), cell(k), to_string(mm.method), cell(mm.correlation), mm.coverage});
        sum.add({"50%", "1", to_string(mm.method), "correlation@" + std::to_string(rpp) + "_reviews"}, mm.correlation);
      }
    }
  }
  return {"fig4", {m, sep, q, sweep, sum.table("fig4_summary", {"bots", "year", "method", "metric"})}};
}

// Review allocation: plain CRP against reward-modulated CRP.
inline ExperimentOutput reproduce_fig5(const ExperimentOptions& o) {
  ResultTable c{"fig5_concentration", {"replicate", "policy", "gini", "max_share", "papers", "reviews"}, {}};
  ResultTable h{"fig5_histogram", {"replicate", "policy", "reviews_per_paper", "papers"}, {}};
  auto tests = detail::paired_tests("fig5_tests");
  std::map<AllocationPolicy, std::vector<Concentration>> res;
  for (auto policy : {AllocationPolicy::crp, AllocationPolicy::reward_crp}) {
    auto cfg = fig5_config(policy);
    cfg.world.seed = o.seed;
    const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    for (std::size_t k = 0; k < reps.size(); ++k) {
      const auto& y = reps[k].years.back();
      res[policy].push_back(y.review_concentration);
      c.add({cell(k), to_string(policy), y.review_concentration.gini, y.review_concentration.max_share,
             cell(y.n_papers), cell(y.n_reviews)});
      for (const auto& [n, count] : y.review_concentration.histogram) {
        h.add({cell(k), to_string(policy), cell(n), cell(count)});
      }
    }
  }
  std::vector<double> gini_gap, share_gap;
  for (std::size_t k = 0; k < o.replicates; ++k) {
    gini_gap.push_back(res[AllocationPolicy::crp][k].gini - res[AllocationPolicy::reward_crp][k].gini);
    share_gap.push_back(res[AllocationPolicy::crp][k].max_share - res[AllocationPolicy::reward_crp][k].max_share);
  }
  detail::add_paired(tests, "reward_crp_gini_below_crp", gini_gap);
  detail::add_paired(tests, "reward_crp_max_share_below_crp", share_gap);
  return {"fig5", {c, h, tests}};
}

// Warm start against a random initial cohort from the same pool.
inline ExperimentOutput reproduce_fig6(const ExperimentOptions& o) {
  ResultTable m{"fig6_metrics", {"replicate", "arm", "year", "method", "correlation", "coverage", "pool_hash"}, {}};
  ResultTable adv{"fig6_advantage", {"year", "median_advantage", "wins", "n"}, {}};
  std::map<bool, std::vector<SimReport>> arms;
  for (bool warm : {false, true}) {
    auto cfg = fig6_config(warm);
    cfg.world.seed = o.seed;
    arms[warm] = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    for (std::size_t k = 0; k < o.replicates; ++k) {
      const auto& rep = arms[warm][k];
      for (const auto& y : rep.years) {
        for (const auto& mm : y.methods) {
          m.add({cell(k), warm ? "warm_start" : "baseline", cell(std::size_t{y.year}), to_string(mm.method),
                 cell(mm.correlation), mm.coverage, std::to_string(rep.pool_hash)});
        }
      }
    }
  }
  const std::size_t years = arms[false].front().years.size();
  for (std::size_t y = 0; y < years; ++y) {
    std::vector<double> d;
    std::size_t wins = 0;
    for (std::size_t k = 0; k < o.replicates; ++k) {
      const auto b = arms[false][k].years[y].metrics(ScoringMethod::bayes_binned).correlation;
      const auto w = arms[true][k].years[y].metrics(ScoringMethod::bayes_binned).correlation;
      if (!b || !w) continue;
      d.push_back(*w - *b);
      wins += *w > *b ? 1 : 0;
    }
    adv.add({cell(y + 1), d.empty() ? Cell{} : Cell{stats::median(d)}, cell(wins), cell(d.size())});
  }
  return {"fig6", {m, adv}};
}

// Continuous ratings against binarized ones, and binarized at five times the volume.
inline ExperimentOutput reproduce_fig7(const ExperimentOptions& o) {
  const std::vector<RatingCondition> conds = {RatingCondition::continuous, RatingCondition::binary,
                                              RatingCondition::binary_5x};
  ResultTable m{"fig7_metrics", {"replicate", "condition", "year", "method", "correlation", "coverage"}, {}};
  ResultTable avg{"fig7_run_average", {"replicate", "condition", "bayes_binned", "simple_mean"}, {}};
  auto tests = detail::paired_tests("fig7_tests");
  std::map<RatingCondition, std::vector<std::optional<double>>> score;
  for (auto cond : conds) {
    auto cfg = fig7_config(cond);
    cfg.world.seed = o.seed;
    const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    for (std::size_t k = 0; k < reps.size(); ++k) {
      for (const auto& y : reps[k].years) {
        for (const auto& mm : y.methods) {
          m.add({cell(k), to_string(cond), cell(std::size_t{y.year}), to_string(mm.method), cell(mm.correlation),
                 mm.coverage});
        }
      }
      const auto b = run_average_correlation(reps[k], ScoringMethod::bayes_binned);
      avg.add({cell(k), to_string(cond), cell(b), cell(run_average_correlation(reps[k], ScoringMethod::simple_mean))});
      score[cond].push_back(b);
    }
  }
  for (auto cond : {RatingCondition::binary, RatingCondition::binary_5x}) {
    std::vector<double> d;
    for (std::size_t k = 0; k < o.replicates; ++k) {
      if (score[cond][k] && score[RatingCondition::continuous][k]) {
        d.push_back(*score[cond][k] - *score[RatingCondition::continuous][k]);
      }
    }
    detail::add_paired(tests, to_string(cond) + "_above_continuous", d);
  }
  return {"fig7", {m, avg, tests}};
}

// Oracle weights with and without the certainty gate.
inline ExperimentOutput reproduce_suppfig4(const ExperimentOptions& o) {
  ResultTable m{"suppfig4_oracle", {"bot_fraction", "replicate", "gated", "ungated", "gated_coverage", "ungated_coverage"}, {}};
  auto tests = detail::paired_tests("suppfig4_tests");
  for (double bf : {0.1, 0.5, 0.8}) {
    auto cfg = fig4_config(bf, 1);
    cfg.methods = {ScoringMethod::oracle, ScoringMethod::oracle_ungated};
    cfg.world.seed = o.seed;
    const auto reps = run_replicates(o.replicates, o.jobs, [&](std::size_t k) { return run_simulation(cfg, k); });
    std::vector<double> d;
    for (std::size_t k = 0; k < reps.size(); ++k) {
      const auto& y = reps[k].years.front();
      const auto& g = y.metrics(ScoringMethod::oracle);
      const auto& u = y.metrics(ScoringMethod::oracle_ungated);
      m.add({bf, cell(k), cell(g.correlation), cell(u.correlation), g.coverage, u.coverage});
      if (g.correlation && u.correlation) d.push_back(*g.correlation - *u.correlation);
    }
    detail::add_paired(tests, "gated_above_ungated@" + detail::fmt_fraction(bf), d);
  }
  return {"suppfig4", {m, tests}};
}

inline ExperimentOutput reproduce(const std::string& figure, const ExperimentOptions& o) {
  if (o.replicates == 0) throw InvalidArgument("replicates must be positive");
  if (figure == "fig1") return reproduce_fig1(o);
  if (figure == "fig2") return reproduce_fig2(o);
  if (figure == "fig3") return reproduce_fig3(o);
  if (figure == "fig4") return reproduce_fig4(o);
  if (figure == "fig5") return reproduce_fig5(o);
  if (figure == "fig6") return reproduce_fig6(o);
  if (figure == "fig7") return reproduce_fig7(o);
  if (figure == "suppfig4") return reproduce_suppfig4(o);
  std::string known;
  for (const auto& id : known_figures()) known += (known.empty() ? "" : ", ") + id;
  throw InvalidArgument("unknown figure '" + figure + "' (known: " + known + ")");
}

}  // namespace peerrev
