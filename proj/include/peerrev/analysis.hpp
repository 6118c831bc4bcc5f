#pragma once

// Statistical analyses of review tables: reviewer agreement, score
// normalizations, confidence strata, author-vs-reviewer quality, percentile
// groups and concentration of reviews over papers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "peerrev/error.hpp"
#include "peerrev/reviewer_quality.hpp"
#include "peerrev/stats.hpp"
#include "peerrev/tables.hpp"

namespace peerrev {

using CorrelationResult = stats::Correlation;

// Flat output row shared by the CLI writers.
struct MetricRecord {
  std::string metric;
  double value = 0.0;
  std::optional<double> stderr_value;
  std::size_t n = 0;
  std::string group;
};

namespace detail {

// Accumulates symmetrized pairs: each unordered pair (a, b) enters as (a, b)
// and (b, a), so x and y share moments.
struct SymmetricPairs {
  double count = 0, s = 0, ss = 0, sxy = 0;

  // All ordered pairs among `scores` at once.
  void add_group(std::span<const double> scores) {
    const double k = static_cast<double>(scores.size());
    if (scores.size() < 2) return;
    double sum = 0, sumsq = 0;
    for (double x : scores) {
      sum += x;
      sumsq += x * x;
    }
    count += k * (k - 1);
    s += (k - 1) * sum;
    ss += (k - 1) * sumsq;
    sxy += sum * sum - sumsq;
  }

  void add_pair(double a, double b) {
    count += 2;
    s += a + b;
    ss += a * a + b * b;
    sxy += 2 * a * b;
  }

  [[nodiscard]] std::size_t unordered_pairs() const { return static_cast<std::size_t>(count / 2); }

  [[nodiscard]] std::optional<double> r() const {
    if (count < 2) return std::nullopt;
    const double m = s / count;
    const double var = ss / count - m * m;
    if (!(var > 0.0)) return std::nullopt;
    return std::clamp((sxy / count - m * m) / var, -1.0, 1.0);
  }
};

}  // namespace detail

// Pearson r over all pairs of reviewers scoring the same paper (each pair in
// both orders). n is the number of unordered pairs.
inline CorrelationResult pairwise_reviewer_correlation(const ReviewTable& table) {
  detail::SymmetricPairs acc;
  std::vector<double> scores;
  for (PaperId p : table.papers()) {
    scores.clear();
    for (std::size_t i : table.reviews_of_paper(p)) scores.push_back(table[i].score);
    acc.add_group(scores);
  }
  if (acc.unordered_pairs() == 0) throw InsufficientData("no paper has two or more reviews");
  const auto r = acc.r();
  if (!r) throw InsufficientData("pairwise correlation undefined (constant scores)");
  return stats::correlation_result(*r, acc.unordered_pairs());
}

enum class Normalization { zscore, rank, mean_removal, distribution_inversion };

inline std::string to_string(Normalization m) {
  switch (m) {
    case Normalization::zscore: return "zscore";
    case Normalization::rank: return "rank";
    case Normalization::mean_removal: return "mean_removal";
    case Normalization::distribution_inversion: return "distribution_inversion";
  }
  return "?";
}

inline Normalization normalization_from_string(const std::string& s) {
  for (auto m : {Normalization::zscore, Normalization::rank, Normalization::mean_removal,
                 Normalization::distribution_inversion}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown normalization '" + s + "'");
}

struct NormalizedTable {
  ReviewTable table;
  std::vector<ReviewerId> passthrough;  // too few reviews; scores left as-is
  std::vector<ReviewerId> zero_spread;  // zscore with sd 0; scores set to 0
};

namespace detail {

// Average 1-based ranks with ties sharing the mean rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Per-reviewer transforms:
//   zscore                 (s - mean_i) / sd_i   (sample sd)
//   rank                   average rank / n, in (0,1]
//   mean_removal           s - mean_i
//   distribution_inversion (average rank - 1/2) / n, the reviewer's empirical
//                          quantile mapped onto Uniform(0,1)
inline NormalizedTable normalize_scores(const ReviewTable& table, Normalization method) {
  std::vector<double> out_scores(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) out_scores[i] = table[i].score;
  NormalizedTable result;
  for (ReviewerId r : table.reviewers()) {
    const auto idx = table.reviews_by(r);
    std::vector<double> xs;
    xs.reserve(idx.size());
    for (std::size_t i : idx) xs.push_back(table[i].score);
    const double n = static_cast<double>(xs.size());
    if (method == Normalization::mean_removal) {
      const double m = stats::mean(xs);
      for (std::size_t k = 0; k < idx.size(); ++k) out_scores[idx[k]] = xs[k] - m;
      continue;
    }
    if (xs.size() < 2) {
      result.passthrough.push_back(r);
      continue;
    }
    switch (method) {
      case Normalization::zscore: {
        const double m = stats::mean(xs);
        const double sd = std::sqrt(stats::variance(xs));
        if (!(sd > 0.0)) result.zero_spread.push_back(r);
        for (std::size_t k = 0; k < idx.size(); ++k) out_scores[idx[k]] = sd > 0.0 ? (xs[k] - m) / sd : 0.0;
        break;
      }
      case Normalization::rank:
      case Normalization::distribution_inversion: {
        const auto ranks = detail::average_ranks(xs);
        const double shift = method == Normalization::rank ? 0.0 : 0.5;
        for (std::size_t k = 0; k < idx.size(); ++k) out_scores[idx[k]] = (ranks[k] - shift) / n;
        break;
      }
      case Normalization::mean_removal:
        break;
    }
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    Review r = table[i];
    r.score = out_scores[i];
    result.table.add(r);
  }
  return result;
}

struct ConfidenceStratum {
  double level = 0.0;
  CorrelationResult correlation;
  double review_share = 0.0;  // fraction of all reviews reporting this level
};

struct StratifiedCorrelation {
  std::vector<ConfidenceStratum> strata;
  std::vector<double> omitted_levels;  // fewer than 3 pairs
};

// Pairs are assigned to the stratum of the lower of their two confidences.
inline StratifiedCorrelation confidence_stratified_correlation(const ReviewTable& table) {
  std::map<double, detail::SymmetricPairs> acc;
  std::map<double, std::size_t> level_reviews;
  std::size_t with_conf = 0;
  for (const auto& r : table.records()) {
    if (!r.confidence) continue;
    ++level_reviews[*r.confidence];
    ++with_conf;
  }
  if (with_conf == 0) throw InsufficientData("no confidence values in table");
  for (PaperId p : table.papers()) {
    const auto idx = table.reviews_of_paper(p);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const Review& ra = table[idx[a]];
      if (!ra.confidence) continue;
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const Review& rb = table[idx[b]];
        if (!rb.confidence) continue;
        acc[std::min(*ra.confidence, *rb.confidence)].add_pair(ra.score, rb.score);
      }
    }
  }
  StratifiedCorrelation out;
  for (const auto& [level, reviews] : level_reviews) {
    auto it = acc.find(level);
    const std::size_t pairs = it == acc.end() ? 0 : it->second.unordered_pairs();
    const auto r = pairs >= 3 ? it->second.r() : std::nullopt;
    if (!r) {
      out.omitted_levels.push_back(level);
      continue;
    }
    ConfidenceStratum s;
    s.level = level;
    s.correlation = stats::correlation_result(*r, pairs);
    s.review_share = static_cast<double>(reviews) / static_cast<double>(with_conf);
    out.strata.push_back(s);
  }
  return out;
}

inline CorrelationResult confidence_score_correlation(const ReviewTable& table) {
  std::vector<double> scores, conf;
  for (const auto& r : table.records()) {
    if (!r.confidence) continue;
    scores.push_back(r.score);
    conf.push_back(*r.confidence);
  }
  if (scores.size() < 3) throw InsufficientData("fewer than 3 reviews with confidence");
  const auto r = stats::pearson(scores, conf);
  if (!r) throw InsufficientData("score/confidence correlation undefined (constant column)");
  return stats::correlation_result(*r, scores.size());
}

struct DualRoleUser {
  UserId user = kNoUser;
  double mean_own_cas = 0.0;
  double reviewer_msd = 0.0;
};

// Users who have both a reviewed paper of their own and a usable review history.
inline std::vector<DualRoleUser> dual_role_users(const ReviewTable& table, const Authorship& authorship) {
  const auto cas = community_average_scores(table);
  const CasDeviationIndex dev(table);
  std::vector<DualRoleUser> out;
  for (const auto& [user, papers] : authorship) {
    std::optional<double> own;
    try {
      own = author_quality(table, authorship, user, &cas).mean_own_cas;
    } catch (const InsufficientData&) {
      continue;
    }
    const auto msd = dev.msd_excluding(user);
    if (!msd) continue;
    out.push_back({user, *own, *msd});
  }
  return out;
}

// Pearson r between mean own CAS and leave-one-out reviewer MSD.
inline CorrelationResult author_vs_reviewer_quality(const ReviewTable& table, const Authorship& authorship) {
  const auto users = dual_role_users(table, authorship);
  if (users.size() < 3) throw InsufficientData("fewer than 3 users both author and review");
  std::vector<double> a, m;
  for (const auto& u : users) {
    a.push_back(u.mean_own_cas);
    m.push_back(u.reviewer_msd);
  }
  const auto r = stats::pearson(a, m);
  if (!r) throw InsufficientData("author/reviewer correlation undefined (constant column)");
  return stats::correlation_result(*r, users.size());
}

struct PercentileGroup {
  double lo = 0.0;
  double hi = 1.0;
};

inline std::vector<PercentileGroup> default_percentile_groups() {
  return {{0.0, 0.1}, {0.4, 0.6}, {0.9, 1.0}};
}

struct GroupStats {
  PercentileGroup group;
  std::size_t n_members = 0;
  double mean_msd = 0.0;
  double sem_msd = 0.0;
  std::size_t n_pairs = 0;
  std::optional<CorrelationResult> pair_correlation;  // omitted below 3 pairs
};

// Groups dual-role users by the percentile of their author score (0 = lowest,
// 1 = highest, ties share a percentile) and reports the reviewer MSD spread and
// the agreement of pairs where both reviewers fall in the group.
inline std::vector<GroupStats> percentile_group_stats(const ReviewTable& table, const Authorship& authorship,
                                                      std::span<const PercentileGroup> groups) {
  const auto users = dual_role_users(table, authorship);
  if (users.empty()) throw InsufficientData("no users both author and review");
  std::vector<double> own;
  for (const auto& u : users) own.push_back(u.mean_own_cas);
  const auto ranks = detail::average_ranks(own);
  const double denom = users.size() > 1 ? static_cast<double>(users.size() - 1) : 1.0;
  std::map<UserId, double> pct;
  std::map<UserId, double> msd;
  for (std::size_t i = 0; i < users.size(); ++i) {
    pct[users[i].user] = users.size() > 1 ? (ranks[i] - 1.0) / denom : 0.5;
    msd[users[i].user] = users[i].reviewer_msd;
  }
  std::vector<GroupStats> out;
  for (const auto& g : groups) {
    if (!(g.lo <= g.hi)) throw InvalidArgument("percentile group with lo > hi");
    GroupStats gs;
    gs.group = g;
    std::set<UserId> members;
    std::vector<double> m;
    for (const auto& [u, p] : pct) {
      if (p >= g.lo && p <= g.hi) {
        members.insert(u);
        m.push_back(msd[u]);
      }
    }
    gs.n_members = members.size();
    if (!m.empty()) gs.mean_msd = stats::mean(m);
    if (m.size() >= 2) gs.sem_msd = std::sqrt(stats::variance(m) / static_cast<double>(m.size()));
    detail::SymmetricPairs acc;
    for (PaperId p : table.papers()) {
      const auto idx = table.reviews_of_paper(p);
      for (std::size_t a = 0; a < idx.size(); ++a) {
        if (!members.contains(table[idx[a]].reviewer)) continue;
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
          if (!members.contains(table[idx[b]].reviewer)) continue;
          acc.add_pair(table[idx[a]].score, table[idx[b]].score);
        }
      }
    }
    gs.n_pairs = acc.unordered_pairs();
    if (gs.n_pairs >= 3) {
      if (const auto r = acc.r()) gs.pair_correlation = stats::correlation_result(*r, gs.n_pairs);
    }
    out.push_back(gs);
  }
  return out;
}

struct Concentration {
  double gini = 0.0;
  double max_share = 0.0;
  std::map<std::size_t, std::size_t> histogram;  // reviews per paper -> number of papers
};

inline Concentration coverage_concentration(std::span<const std::size_t> review_counts) {
  if (review_counts.empty()) throw InsufficientData("no papers");
  Concentration c;
  std::vector<double> xs;
  xs.reserve(review_counts.size());
  std::size_t total = 0, most = 0;
  for (std::size_t n : review_counts) {
    xs.push_back(static_cast<double>(n));
    total += n;
    most = std::max(most, n);
    ++c.histogram[n];
  }
  c.gini = stats::gini(xs);
  c.max_share = total == 0 ? 0.0 : static_cast<double>(most) / static_cast<double>(total);
  return c;
}

}  // namespace peerrev
