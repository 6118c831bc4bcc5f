#pragma once

// Multi-year open-platform simulation: users join and leave, pick papers to
// review under an allocation policy, rate each other's reviews, and the
// platform scores papers with several estimators that are compared against the
// hidden qualities.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerrev/analysis.hpp"
#include "peerrev/error.hpp"
#include "peerrev/estimator.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/reviewer_quality.hpp"
#include "peerrev/rng.hpp"
#include "peerrev/stats.hpp"
#include "peerrev/tables.hpp"

namespace peerrev {

enum class AllocationPolicy { uniform, crp, reward_crp };

inline std::string to_string(AllocationPolicy p) {
  switch (p) {
    case AllocationPolicy::uniform: return "uniform";
    case AllocationPolicy::crp: return "crp";
    case AllocationPolicy::reward_crp: return "reward_crp";
  }
  return "?";
}

inline AllocationPolicy allocation_policy_from_string(const std::string& s) {
  if (s == "uniform") return AllocationPolicy::uniform;
  if (s == "crp") return AllocationPolicy::crp;
  if (s == "reward_crp") return AllocationPolicy::reward_crp;
  throw InvalidArgument("unknown allocation policy '" + s + "'");
}

enum class ScoringMethod { simple_mean, bayes_binned, bayes_direct_sd, oracle, threshold_top_pct, oracle_ungated };

inline std::string to_string(ScoringMethod m) {
  switch (m) {
    case ScoringMethod::simple_mean: return "simple_mean";
    case ScoringMethod::bayes_binned: return "bayes_binned";
    case ScoringMethod::bayes_direct_sd: return "bayes_direct_sd";
    case ScoringMethod::oracle: return "oracle";
    case ScoringMethod::threshold_top_pct: return "threshold_top_pct";
    case ScoringMethod::oracle_ungated: return "oracle_ungated";
  }
  return "?";
}

inline ScoringMethod scoring_method_from_string(const std::string& s) {
  for (auto m : {ScoringMethod::simple_mean, ScoringMethod::bayes_binned, ScoringMethod::bayes_direct_sd,
                 ScoringMethod::oracle, ScoringMethod::threshold_top_pct, ScoringMethod::oracle_ungated}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown scoring method '" + s + "'");
}

inline std::vector<ScoringMethod> all_scoring_methods() {
  return {ScoringMethod::simple_mean, ScoringMethod::bayes_binned,      ScoringMethod::bayes_direct_sd,
          ScoringMethod::oracle,      ScoringMethod::threshold_top_pct, ScoringMethod::oracle_ungated};
}

struct ScoringConfig {
  CertaintyPolicy certainty{0.15};
  QualityConfig quality;
  double top_reviewer_pct = 0.20;  // reference papers for binning
  double top_paper_pct = 0.20;
  double threshold_cutoff = 0.80;  // threshold_top_pct keeps reviewers at or above this quantile

  void validate() const {
    auto frac = [](double x) { return x > 0.0 && x <= 1.0; };
    if (!frac(top_reviewer_pct) || !frac(top_paper_pct)) throw InvalidArgument("reference percentages must lie in (0,1]");
    if (!(threshold_cutoff >= 0.0 && threshold_cutoff <= 1.0)) throw InvalidArgument("threshold_cutoff must lie in [0,1]");
    if (quality.n_bins == 0) throw InvalidArgument("n_bins must be positive");
    if (!(quality.sigma_floor > 0.0)) throw InvalidArgument("sigma_floor must be positive");
  }
};

struct SimConfig {
  std::size_t years = 5;
  std::size_t initial_users = 500;
  std::size_t initial_papers_per_user = 20;
  std::size_t joins_per_year = 2000;  // from year 2 on
  double churn_fraction = 0.10;
  // Papers each pre-existing user adds every year after the first. Zero keeps
  // content fixed at onboarding.
  std::size_t papers_per_user_year = 0;
  std::size_t reviews_per_user_year = 3;
  std::size_t ratings_per_user_year = 10;
  bool binary_ratings = false;
  double binary_threshold = 0.5;
  bool warm_start = false;
  AllocationPolicy allocation = AllocationPolicy::uniform;
  std::optional<std::size_t> review_cap;
  double prior_variance = 1.0 / 12.0;  // score variance of an unreviewed paper
  ScoringConfig scoring;
  WorldConfig world;
  std::vector<ScoringMethod> methods = all_scoring_methods();

  void validate() const {
    world.validate();
    scoring.validate();
    if (years == 0) throw InvalidArgument("years must be positive");
    if (initial_users < 2) throw InvalidArgument("need at least two initial users");
    if (!(churn_fraction >= 0.0 && churn_fraction < 1.0)) throw InvalidArgument("churn_fraction must lie in [0,1)");
    if (!(binary_threshold >= 0.0 && binary_threshold <= 1.0)) throw InvalidArgument("binary_threshold must lie in [0,1]");
    if (!(prior_variance > 0.0)) throw InvalidArgument("prior_variance must be positive");
    if (initial_papers_per_user == 0 && papers_per_user_year == 0) throw InvalidArgument("configuration creates no papers");
    if (methods.empty()) throw InvalidArgument("no scoring methods requested");
  }

  [[nodiscard]] std::size_t review_budget() const {
    return review_cap ? std::min(reviews_per_user_year, *review_cap) : reviews_per_user_year;
  }
  [[nodiscard]] std::size_t pool_size() const { return initial_users + joins_per_year * (years - 1); }
};

// 1 when value >= threshold.
inline double binarize_rating(double value, double threshold = 0.5) {
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument("rating outside [0,1]");
  return value >= threshold ? 1.0 : 0.0;
}

// Ids of the n best reviewers, best first: non-bots by descending p (ties by
// id), then bots by id.
inline std::vector<UserId> warm_start_selection(std::span<const Agent> pool, std::size_t n) {
  if (n > pool.size()) throw InvalidArgument("warm start asks for more users than the pool holds");
  std::vector<const Agent*> order;
  order.reserve(pool.size());
  for (const auto& a : pool) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(), [](const Agent* a, const Agent* b) {
    if (a->is_bot != b->is_bot) return !a->is_bot;
    if (!a->is_bot && a->true_quality != b->true_quality) return a->true_quality > b->true_quality;
    return a->id < b->id;
  });
  std::vector<UserId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(order[i]->id);
  return out;
}

// Order-independent fingerprint of the pool's (bot flag, p) multiset.
inline std::uint64_t pool_hash(std::span<const Agent> pool) {
  std::vector<std::pair<bool, double>> items;
  items.reserve(pool.size());
  for (const auto& a : pool) items.emplace_back(a.is_bot, a.true_quality);
  std::sort(items.begin(), items.end());
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [bot, p] : items) {
    mix(bot ? 1 : 0);
    mix(std::bit_cast<std::uint64_t>(p));
  }
  return h;
}

// Reduction in a paper's score variance from one more review by a reviewer
// with spread sigma_hat.
inline double variance_reduction(double current_variance, double sigma_hat) {
  if (!(current_variance > 0.0)) throw InvalidArgument("current variance must be positive");
  if (std::isinf(sigma_hat)) return 0.0;
  if (!(sigma_hat > 0.0)) throw InvalidArgument("sigma_hat must be positive");
  const double updated = 1.0 / (1.0 / current_variance + 1.0 / (sigma_hat * sigma_hat));
  return current_variance - updated;
}

inline double allocation_weight(AllocationPolicy policy, std::size_t n_reviews, double reward) {
  switch (policy) {
    case AllocationPolicy::uniform: return 1.0;
    case AllocationPolicy::crp: return static_cast<double>(n_reviews) + 1.0;
    case AllocationPolicy::reward_crp: return (static_cast<double>(n_reviews) + 1.0) * reward;
  }
  return 0.0;
}

// Selection probabilities over candidate papers with the given review counts
// and rewards.
inline std::vector<double> allocation_probabilities(AllocationPolicy policy, std::span<const std::size_t> counts,
                                                    std::span<const double> rewards) {
  if (counts.size() != rewards.size()) throw InvalidArgument("counts and rewards differ in length");
  std::vector<double> w(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = allocation_weight(policy, counts[i], rewards[i]);
    total += w[i];
  }
  if (!(total > 0.0)) throw InsufficientData("no paper has positive selection weight");
  for (double& x : w) x /= total;
  return w;
}

namespace detail {

// Fenwick tree over appendable nonnegative weights, for sampling index i with
// probability w_i / sum(w).
class FenwickSampler {
 public:
  void push_back(double w) {
    const std::size_t i = tree_.size() + 1;  // 1-based position
    const std::size_t low = i & (~i + 1);
    tree_.push_back(w + prefix(i - 1) - prefix(i - low));
    raw_.push_back(w);
  }
  void add(std::size_t idx, double dw) {
    raw_[idx] += dw;
    for (std::size_t i = idx + 1; i <= tree_.size(); i += i & (~i + 1)) tree_[i - 1] += dw;
  }
  [[nodiscard]] double total() const { return prefix(tree_.size()); }
  [[nodiscard]] std::size_t size() const { return raw_.size(); }
  [[nodiscard]] double weight(std::size_t idx) const { return raw_[idx]; }

  std::size_t sample(Rng& rng) const {
    double u = uniform01(rng) * total();
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(tree_.size());
    for (; step > 0; step >>= 1) {
      if (pos + step <= tree_.size() && tree_[pos + step - 1] <= u) {
        pos += step;
        u -= tree_[pos - 1];
      }
    }
    return std::min(pos, tree_.size() - 1);
  }

 private:
  [[nodiscard]] double prefix(std::size_t i) const {
    double s = 0.0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i - 1];
    return s;
  }
  std::vector<double> tree_;
  std::vector<double> raw_;
};

}  // namespace detail

// Read-only inputs for scoring and evaluation; agents and papers are indexed by id.
struct PlatformView {
  const ReviewTable* reviews = nullptr;
  const RatingTable* ratings = nullptr;
  std::span<const Agent> agents;
  std::span<const PaperTruth> papers;
  double alpha = 0.18;
};

using Estimates = std::vector<std::optional<PaperEstimate>>;  // by paper id; empty when unscored

// Rating-based quality for every reviewer in the table; reviewers nobody rated
// get the mean of the rated reviewers' means.
inline QualityMap reviewer_qualities_imputed(const ReviewTable& reviews, const RatingTable& ratings) {
  const auto rated = rating_based_quality(ratings);
  QualityMap out;
  double sum = 0.0;
  std::size_t n = 0;
  for (ReviewerId r : reviews.reviewers()) {
    auto it = rated.find(r);
    if (it != rated.end()) {
      out.emplace(r, it->second);
      sum += *it->second.rating_mean;
      ++n;
    }
  }
  if (n == 0) throw InsufficientData("no reviewer has received a rating");
  const double fill = sum / static_cast<double>(n);
  for (ReviewerId r : reviews.reviewers()) {
    if (out.contains(r)) continue;
    ReviewerQuality q;
    q.reviewer = r;
    q.rating_mean = fill;
    out.emplace(r, q);
  }
  return out;
}

inline QualityMap binned_reviewer_quality(const ReviewTable& reviews, const RatingTable& ratings,
                                          const ScoringConfig& cfg) {
  const auto qualities = reviewer_qualities_imputed(reviews, ratings);
  const auto refs = high_certainty_paper_subset(reviews, qualities, cfg.top_reviewer_pct, cfg.top_paper_pct);
  return binned_sigma(reviews, qualities, cfg.quality.n_bins, refs, cfg.quality);
}

namespace detail {

template <class SigmaFn>
Estimates weighted_estimates(const PlatformView& v, const CertaintyPolicy* gate, SigmaFn&& sigma_of) {
  Estimates out(v.papers.size());
  std::vector<ScoreSample> samples;
  std::vector<double> sigmas;
  for (PaperId p : v.reviews->papers()) {
    if (p >= out.size()) throw ValidationError("review references unknown paper " + std::to_string(p));
    samples.clear();
    sigmas.clear();
    for (std::size_t i : v.reviews->reviews_of_paper(p)) {
      const auto& r = (*v.reviews)[i];
      const std::optional<double> s = sigma_of(r);
      if (!s) continue;
      samples.push_back({r.score, r.reviewer});
      sigmas.push_back(*s);
    }
    if (samples.empty()) continue;
    auto est = inverse_variance_mean(samples, sigmas);
    if (gate != nullptr) est = certainty_gate(est, *gate);
    out[p] = est;
  }
  return out;
}

}  // namespace detail

// Per-paper estimates for one scoring method.
inline Estimates score_platform(const PlatformView& v, ScoringMethod method, const ScoringConfig& cfg) {
  if (v.reviews == nullptr || v.ratings == nullptr) throw InvalidArgument("platform view is incomplete");
  const auto& reviews = *v.reviews;
  switch (method) {
    case ScoringMethod::simple_mean: {
      Estimates out(v.papers.size());
      std::vector<ScoreSample> samples;
      for (PaperId p : reviews.papers()) {
        if (p >= out.size()) throw ValidationError("review references unknown paper " + std::to_string(p));
        samples.clear();
        for (std::size_t i : reviews.reviews_of_paper(p)) samples.push_back({reviews[i].score, reviews[i].reviewer});
        out[p] = simple_mean(samples);
      }
      return out;
    }
    case ScoringMethod::bayes_binned: {
      const auto q = binned_reviewer_quality(reviews, *v.ratings, cfg);
      return detail::weighted_estimates(v, &cfg.certainty,
                                        [&](const Review& r) -> std::optional<double> { return q.at(r.reviewer).sigma_hat; });
    }
    case ScoringMethod::bayes_direct_sd: {
      const CasDeviationIndex idx(reviews);
      const auto pooled_msd = idx.pooled_msd();
      if (!pooled_msd) throw InsufficientData("no paper has two reviews");
      const double pooled = floored_sigma(*pooled_msd, cfg.quality);
      // No certainty gate: this is the plain history-based weighting.
      return detail::weighted_estimates(v, nullptr, [&](const Review& r) -> std::optional<double> {
        const auto msd = idx.msd_excluding(r.reviewer, r.paper);
        return msd ? floored_sigma(*msd, cfg.quality) : pooled;
      });
    }
    case ScoringMethod::oracle:
    case ScoringMethod::oracle_ungated: {
      const CertaintyPolicy* gate = method == ScoringMethod::oracle ? &cfg.certainty : nullptr;
      return detail::weighted_estimates(v, gate, [&](const Review& r) -> std::optional<double> {
        if (r.reviewer >= v.agents.size()) throw ValidationError("review by unknown agent " + std::to_string(r.reviewer));
        const Agent& a = v.agents[r.reviewer];
        if (a.is_bot) return std::nullopt;
        return a.noise_sd(v.alpha);
      });
    }
    case ScoringMethod::threshold_top_pct: {
      const auto q = reviewer_qualities_imputed(reviews, *v.ratings);
      const auto keep = percentile_threshold_filter(q, cfg.threshold_cutoff);
      Estimates out(v.papers.size());
      std::vector<ScoreSample> samples;
      for (PaperId p : reviews.papers()) {
        if (p >= out.size()) throw ValidationError("review references unknown paper " + std::to_string(p));
        samples.clear();
        for (std::size_t i : reviews.reviews_of_paper(p)) {
          if (keep.contains(reviews[i].reviewer)) samples.push_back({reviews[i].score, reviews[i].reviewer});
        }
        if (!samples.empty()) out[p] = simple_mean(samples);
      }
      return out;
    }
  }
  throw InvalidArgument("unknown scoring method");
}

struct MethodMetrics {
  ScoringMethod method = ScoringMethod::simple_mean;
  std::optional<double> correlation;  // absent with fewer than two published papers
  double coverage = 0.0;
  std::size_t n_published = 0;
  std::string note;  // why the method produced nothing, if it failed
};

// Correlation with true quality over published papers, and coverage over all papers.
inline MethodMetrics evaluate_estimates(std::span<const PaperTruth> papers, const Estimates& est,
                                        ScoringMethod method) {
  if (papers.empty()) throw InsufficientData("no papers to evaluate");
  MethodMetrics m;
  m.method = method;
  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < est.size() && p < papers.size(); ++p) {
    if (!est[p] || !est[p]->published) continue;
    xs.push_back(est[p]->mean);
    ys.push_back(papers[p].true_quality);
  }
  m.n_published = xs.size();
  m.coverage = static_cast<double>(xs.size()) / static_cast<double>(papers.size());
  if (xs.size() >= 2) m.correlation = stats::pearson(xs, ys);
  return m;
}

inline MethodMetrics evaluate_method(const PlatformView& v, ScoringMethod method, const ScoringConfig& cfg) {
  try {
    return evaluate_estimates(v.papers, score_platform(v, method, cfg), method);
  } catch (const InsufficientData& e) {
    MethodMetrics m;
    m.method = method;
    m.note = e.what();
    return m;
  }
}

constexpr std::size_t kQualityHistogramBins = 10;

// Rated reviewers' mean received rating, split by the hidden bot flag.
struct BotSplit {
  std::vector<double> bots;
  std::vector<double> humans;
  std::vector<std::size_t> bot_histogram = std::vector<std::size_t>(kQualityHistogramBins, 0);
  std::vector<std::size_t> human_histogram = std::vector<std::size_t>(kQualityHistogramBins, 0);
  std::optional<double> balanced_accuracy;  // best single threshold
};

inline BotSplit bot_quality_split(const RatingTable& ratings, std::span<const Agent> agents) {
  BotSplit s;
  for (const auto& [id, q] : rating_based_quality(ratings)) {
    if (id >= agents.size()) throw ValidationError("rating of unknown agent " + std::to_string(id));
    const double x = *q.rating_mean;
    const auto bin = std::min(kQualityHistogramBins - 1, static_cast<std::size_t>(x * kQualityHistogramBins));
    if (agents[id].is_bot) {
      s.bots.push_back(x);
      ++s.bot_histogram[bin];
    } else {
      s.humans.push_back(x);
      ++s.human_histogram[bin];
    }
  }
  if (!s.bots.empty() && !s.humans.empty()) s.balanced_accuracy = stats::threshold_balanced_accuracy(s.bots, s.humans);
  return s;
}

struct YearReport {
  std::uint32_t year = 0;
  std::size_t live_users = 0;
  std::size_t joined = 0;
  std::size_t churned = 0;
  std::size_t n_papers = 0;
  std::size_t n_reviews = 0;  // cumulative
  std::size_t n_ratings = 0;  // cumulative
  std::size_t reviews_written = 0;  // this year
  std::size_t reviews_forfeited = 0;  // this year, for lack of eligible papers
  std::vector<MethodMetrics> methods;
  Concentration review_concentration;
  BotSplit bot_split;

  [[nodiscard]] const MethodMetrics& metrics(ScoringMethod m) const {
    for (const auto& x : methods) {
      if (x.method == m) return x;
    }
    throw InvalidArgument("method " + to_string(m) + " was not evaluated");
  }
};

struct SimReport {
  std::vector<YearReport> years;
  std::uint64_t pool_hash = 0;
  std::vector<std::string> warnings;
};

struct SimState {
  std::vector<Agent> pool;  // pool[i].id == i
  std::vector<UserId> join_order;
  std::size_t next_join = 0;
  std::vector<UserId> live;  // ascending
  std::vector<PaperTruth> papers;  // papers[j].id == j
  ReviewTable reviews;
  RatingTable ratings;
  Authorship authorship;
  std::vector<std::size_t> review_count;  // per paper
  std::vector<double> precision_sum;  // per paper, sum of 1/sigma_hat^2 at review time
  std::map<UserId, double> sigma_estimate;  // latest binned sigma per reviewer
  std::vector<std::size_t> reviews_this_year;  // per pool agent
  std::uint32_t year = 0;

  [[nodiscard]] double paper_variance(PaperId p, double prior_variance) const {
    return 1.0 / (1.0 / prior_variance + precision_sum[p]);
  }
};

class Simulation {
 public:
  explicit Simulation(SimConfig cfg, std::uint64_t replicate = 0) : cfg_(std::move(cfg)), replicate_(replicate) {
    cfg_.validate();
    Rng pool_rng = make_stream(cfg_.world.seed, replicate_, 0);
    s_.pool = sample_agents(cfg_.world, cfg_.pool_size(), pool_rng);
    // The baseline join order is drawn whatever warm_start says, so both arms
    // share it.
    Rng order_rng = make_stream(cfg_.world.seed, replicate_, 1);
    std::vector<UserId> order(s_.pool.size());
    std::iota(order.begin(), order.end(), UserId{0});
    std::shuffle(order.begin(), order.end(), order_rng);
    if (cfg_.warm_start) {
      s_.join_order = warm_start_selection(s_.pool, cfg_.initial_users);
      std::vector<bool> taken(s_.pool.size(), false);
      for (UserId u : s_.join_order) taken[u] = true;
      for (UserId u : order) {
        if (!taken[u]) s_.join_order.push_back(u);
      }
    } else {
      s_.join_order = std::move(order);
    }
    s_.reviews_this_year.assign(s_.pool.size(), 0);
    rng_ = make_stream(cfg_.world.seed, replicate_, 2);
  }

  [[nodiscard]] bool done() const { return s_.year >= cfg_.years; }
  [[nodiscard]] const SimState& state() const { return s_; }
  [[nodiscard]] const SimConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

  [[nodiscard]] PlatformView view() const {
    return PlatformView{&s_.reviews, &s_.ratings, s_.pool, s_.papers, cfg_.world.alpha};
  }

  YearReport step() {
    if (done()) throw InvalidArgument("simulation already finished");
    ++s_.year;
    YearReport rep;
    rep.year = s_.year;

    const std::vector<UserId> existing = s_.live;
    rep.joined = onboard(s_.year == 1 ? cfg_.initial_users : cfg_.joins_per_year);
    if (s_.year > 1) {
      rep.churned = churn(existing);
      if (cfg_.papers_per_user_year > 0) {
        for (UserId u : existing) {
          if (std::binary_search(s_.live.begin(), s_.live.end(), u)) add_papers(u, cfg_.papers_per_user_year);
        }
      }
    }

    std::fill(s_.reviews_this_year.begin(), s_.reviews_this_year.end(), 0);
    write_reviews(rep);
    write_ratings();

    const auto v = view();
    for (ScoringMethod m : cfg_.methods) {
      rep.methods.push_back(evaluate_method(v, m, cfg_.scoring));
      if (!rep.methods.back().note.empty()) {
        warnings_.push_back("year " + std::to_string(s_.year) + ": " + to_string(m) + ": " + rep.methods.back().note);
      }
    }
    refresh_sigma_estimates();

    rep.live_users = s_.live.size();
    rep.n_papers = s_.papers.size();
    rep.n_reviews = s_.reviews.size();
    rep.n_ratings = s_.ratings.size();
    rep.review_concentration = coverage_concentration(s_.review_count);
    rep.bot_split = bot_quality_split(s_.ratings, s_.pool);
    return rep;
  }

  // Allocation for one review; nullopt when nothing is eligible.
  std::optional<PaperId> allocate_review(UserId reviewer) {
    const auto eligible = [&](PaperId p) {
      return s_.papers[p].author != reviewer && !s_.reviews.contains(reviewer, p);
    };
    if (s_.papers.empty()) return std::nullopt;
    constexpr int kTries = 64;
    switch (cfg_.allocation) {
      case AllocationPolicy::uniform:
        for (int t = 0; t < kTries; ++t) {
          const auto p = static_cast<PaperId>(uniform_index(rng_, s_.papers.size()));
          if (eligible(p)) return p;
        }
        break;
      case AllocationPolicy::crp:
        for (int t = 0; t < kTries; ++t) {
          const auto p = static_cast<PaperId>(crp_.sample(rng_));
          if (eligible(p)) return p;
        }
        break;
      case AllocationPolicy::reward_crp:
        break;
    }
    // Exact draw over the explicit eligible set.
    const double sigma = reward_sigma(reviewer);
    std::vector<PaperId> ids;
    std::vector<double> cum;
    double total = 0.0;
    for (PaperId p = 0; p < s_.papers.size(); ++p) {
      if (!eligible(p)) continue;
      const double reward = cfg_.allocation == AllocationPolicy::reward_crp
                                ? variance_reduction(s_.paper_variance(p, cfg_.prior_variance), sigma)
                                : 0.0;
      const double w = allocation_weight(cfg_.allocation, s_.review_count[p], reward);
      if (!(w > 0.0)) continue;
      total += w;
      ids.push_back(p);
      cum.push_back(total);
    }
    if (ids.empty()) return std::nullopt;
    const double u = uniform01(rng_) * total;
    const auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    return ids[std::min(k, ids.size() - 1)];
  }

  // Reward for `reviewer` reviewing paper `p` now.
  [[nodiscard]] double reward_signal(PaperId p, UserId reviewer) const {
    return variance_reduction(s_.paper_variance(p, cfg_.prior_variance), reward_sigma(reviewer));
  }

 private:
  std::size_t onboard(std::size_t n) {
    std::size_t added = 0;
    while (added < n && s_.next_join < s_.join_order.size()) {
      const UserId u = s_.join_order[s_.next_join++];
      s_.live.insert(std::upper_bound(s_.live.begin(), s_.live.end(), u), u);
      add_papers(u, cfg_.initial_papers_per_user);
      ++added;
    }
    if (added < n) warnings_.push_back("year " + std::to_string(s_.year) + ": agent pool exhausted");
    return added;
  }

  std::size_t churn(const std::vector<UserId>& existing) {
    const auto n = static_cast<std::size_t>(std::llround(cfg_.churn_fraction * static_cast<double>(existing.size())));
    std::vector<UserId> leaving = existing;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + uniform_index(rng_, leaving.size() - i);
      std::swap(leaving[i], leaving[j]);
    }
    leaving.resize(n);
    std::sort(leaving.begin(), leaving.end());
    std::vector<UserId> kept;
    kept.reserve(s_.live.size() - n);
    std::set_difference(s_.live.begin(), s_.live.end(), leaving.begin(), leaving.end(), std::back_inserter(kept));
    s_.live = std::move(kept);
    return n;
  }

  void add_papers(UserId author, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto id = static_cast<PaperId>(s_.papers.size());
      s_.papers.push_back(sample_paper(cfg_.world, id, author, rng_));
      s_.authorship[author].insert(id);
      s_.review_count.push_back(0);
      s_.precision_sum.push_back(0.0);
      crp_.push_back(1.0);
    }
  }

  void write_reviews(YearReport& rep) {
    const std::size_t budget = cfg_.review_budget();
    std::vector<UserId> order = s_.live;
    std::vector<bool> exhausted(s_.pool.size(), false);
    for (std::size_t round = 0; round < budget; ++round) {
      std::shuffle(order.begin(), order.end(), rng_);
      for (UserId u : order) {
        if (exhausted[u]) {
          ++rep.reviews_forfeited;
          continue;
        }
        const auto p = allocate_review(u);
        if (!p) {
          exhausted[u] = true;
          ++rep.reviews_forfeited;
          continue;
        }
        const auto g = generate_review(s_.pool[u], s_.papers[*p], cfg_.world, rng_, s_.year);
        s_.reviews.add(Review{u, *p, g.value, std::nullopt, s_.year});
        const double sig = reward_sigma(u);
        s_.precision_sum[*p] += 1.0 / (sig * sig);
        ++s_.review_count[*p];
        crp_.add(*p, 1.0);
        ++s_.reviews_this_year[u];
        ++rep.reviews_written;
      }
    }
    if (rep.reviews_forfeited > 0) {
      warnings_.push_back("year " + std::to_string(s_.year) + ": " + std::to_string(rep.reviews_forfeited) +
                          " reviews truncated for lack of eligible papers");
    }
  }

  void write_ratings() {
    const auto& recs = s_.reviews.records();
    if (recs.empty()) return;
    for (UserId u : s_.live) {
      for (std::size_t k = 0; k < cfg_.ratings_per_user_year; ++k) {
        const auto target = pick_review_not_by(u);
        if (!target) break;
        const UserId ratee = recs[*target].reviewer;
        auto g = generate_rating(s_.pool[u], s_.pool[ratee], cfg_.world, rng_, s_.year);
        const double v = cfg_.binary_ratings ? binarize_rating(g.value, cfg_.binary_threshold) : g.value;
        s_.ratings.add(Rating{u, ratee, v, s_.year});
      }
    }
  }

  std::optional<std::size_t> pick_review_not_by(UserId u) {
    const auto& recs = s_.reviews.records();
    for (int t = 0; t < 64; ++t) {
      const std::size_t i = uniform_index(rng_, recs.size());
      if (recs[i].reviewer != u) return i;
    }
    const std::size_t own = s_.reviews.reviews_by(u).size();
    if (own >= recs.size()) return std::nullopt;
    std::size_t k = uniform_index(rng_, recs.size() - own);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i].reviewer == u) continue;
      if (k-- == 0) return i;
    }
    return std::nullopt;
  }

  // Sigma used for rewards and paper precision: the reviewer's last binned
  // estimate, else the median of known estimates, else the prior spread.
  [[nodiscard]] double reward_sigma(UserId u) const {
    auto it = s_.sigma_estimate.find(u);
    if (it != s_.sigma_estimate.end()) return it->second;
    if (fallback_sigma_) return *fallback_sigma_;
    return std::sqrt(cfg_.prior_variance);
  }

  void refresh_sigma_estimates() {
    if (cfg_.allocation != AllocationPolicy::reward_crp) return;
    try {
      const auto q = binned_reviewer_quality(s_.reviews, s_.ratings, cfg_.scoring);
      std::vector<double> all;
      for (const auto& [id, rq] : q) {
        s_.sigma_estimate[id] = *rq.sigma_hat;
        all.push_back(*rq.sigma_hat);
      }
      if (!all.empty()) fallback_sigma_ = stats::median(all);
    } catch (const InsufficientData&) {
      // keep the previous estimates
    }
  }

  SimConfig cfg_;
  std::uint64_t replicate_ = 0;
  SimState s_;
  Rng rng_;
  detail::FenwickSampler crp_;
  std::optional<double> fallback_sigma_;
  std::vector<std::string> warnings_;
};

inline SimReport run_simulation(const SimConfig& cfg, std::uint64_t replicate = 0) {
  Simulation sim(cfg, replicate);
  SimReport rep;
  rep.pool_hash = pool_hash(sim.state().pool);
  while (!sim.done()) rep.years.push_back(sim.step());
  rep.warnings = sim.warnings();
  return rep;
}

}  // namespace peerrev
