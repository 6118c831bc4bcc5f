#pragma once

// Reviewer-quality estimation: community average scores (CAS), leave-one-out
// deviations, k-review histories, authorship quality, ratings of reviews, and
// the rating-binned pooled MSD used as the per-reviewer sigma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "peerrev/error.hpp"
#include "peerrev/stats.hpp"
#include "peerrev/tables.hpp"
#include "peerrev/types.hpp"

namespace peerrev {

struct QualityConfig {
  double sigma_floor = 0.01;
  std::size_t n_bins = 10;
  // Fail instead of falling back when a history is shorter than requested.
  bool strict_history = false;
  // Lower end of the min-max normalized author-quality weights.
  double min_author_weight = 0.01;
};

struct CASMap {
  std::vector<double> cas;  // indexed by paper id; NaN when the paper has no reviews
  std::vector<std::size_t> n_reviews;

  [[nodiscard]] bool has(PaperId p) const { return p < n_reviews.size() && n_reviews[p] > 0; }
  [[nodiscard]] double at(PaperId p) const {
    if (!has(p)) throw InsufficientData("no CAS for paper " + std::to_string(p));
    return cas[p];
  }
};

struct ReviewerQuality {
  ReviewerId reviewer = kNoUser;
  std::optional<double> msd_from_cas;
  std::optional<double> sigma_hat;
  std::optional<double> rating_mean;
  std::optional<std::size_t> bin_index;
  std::optional<double> bin_msd;
  std::size_t n_used = 0;        // deviations or ratings behind the estimate
  bool partial_history = false;  // fewer than k reviews were available
  bool inherited_bin = false;    // bin had no reference deviations
};

using QualityMap = std::map<ReviewerId, ReviewerQuality>;

struct AuthorQuality {
  UserId author = kNoUser;
  double mean_own_cas = 0.0;
  std::size_t n_papers = 0;
};

inline double floored_sigma(double msd, const QualityConfig& cfg) {
  return std::max(std::sqrt(std::max(msd, 0.0)), cfg.sigma_floor);
}

inline CASMap community_average_scores(const ReviewTable& table) {
  if (table.empty()) throw InsufficientData("empty review table");
  CASMap out;
  const std::size_t bound = table.paper_id_bound();
  out.cas.assign(bound, std::numeric_limits<double>::quiet_NaN());
  out.n_reviews.assign(bound, 0);
  for (std::size_t p = 0; p < bound; ++p) {
    const auto idx = table.reviews_of_paper(static_cast<PaperId>(p));
    if (idx.empty()) continue;
    double sum = 0.0;
    for (std::size_t i : idx) sum += table[i].score;
    out.cas[p] = sum / static_cast<double>(idx.size());
    out.n_reviews[p] = idx.size();
  }
  return out;
}

// Mean of the paper's scores without `reviewer`'s record. A reviewer who did
// not review the paper leaves the full CAS.
inline double leave_one_out_cas(const ReviewTable& table, ReviewerId reviewer, PaperId paper) {
  const auto idx = table.reviews_of_paper(paper);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i : idx) {
    if (table[i].reviewer == reviewer) continue;
    sum += table[i].score;
    ++n;
  }
  if (n == 0) throw InsufficientData("CAS undefined after removal (paper " + std::to_string(paper) + ")");
  return sum / static_cast<double>(n);
}

// Mean squared deviation of a reviewer's scores from the leave-one-out CAS of
// each paper they reviewed, optionally leaving one paper out entirely.
inline ReviewerQuality reviewer_msd_from_cas(const ReviewTable& table, ReviewerId reviewer,
                                             std::optional<PaperId> exclude_paper = std::nullopt,
                                             const QualityConfig& cfg = {}) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i : table.reviews_by(reviewer)) {
    const Review& r = table[i];
    if (exclude_paper && r.paper == *exclude_paper) continue;
    if (table.reviews_of_paper(r.paper).size() < 2) continue;
    const double d = r.score - leave_one_out_cas(table, reviewer, r.paper);
    ss += d * d;
    ++n;
  }
  if (n == 0) throw InsufficientData("insufficient history for reviewer " + std::to_string(reviewer));
  ReviewerQuality q;
  q.reviewer = reviewer;
  q.msd_from_cas = ss / static_cast<double>(n);
  q.sigma_hat = floored_sigma(*q.msd_from_cas, cfg);
  q.n_used = n;
  return q;
}

// Leave-one-out squared deviations for every record, computed once, so that
// many (reviewer, excluded paper) queries are cheap. Results are bit-identical
// to reviewer_msd_from_cas.
class CasDeviationIndex {
 public:
  explicit CasDeviationIndex(const ReviewTable& table) : table_(&table) {
    sq_dev_.assign(table.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < table.size(); ++i) {
      const Review& r = table[i];
      if (table.reviews_of_paper(r.paper).size() < 2) continue;
      const double d = r.score - leave_one_out_cas(table, r.reviewer, r.paper);
      sq_dev_[i] = d * d;
    }
  }

  // Squared deviation of record i from its leave-one-out CAS; NaN when undefined.
  [[nodiscard]] double squared_deviation(std::size_t record) const { return sq_dev_[record]; }

  // MSD of `reviewer` leaving `paper` out; nullopt when no usable reviews remain.
  [[nodiscard]] std::optional<double> msd_excluding(ReviewerId reviewer,
                                                    std::optional<PaperId> paper = std::nullopt) const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i : table_->reviews_by(reviewer)) {
      if (std::isnan(sq_dev_[i])) continue;
      if (paper && (*table_)[i].paper == *paper) continue;
      s += sq_dev_[i];
      ++n;
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  }

  // Pooled MSD over every usable record.
  [[nodiscard]] std::optional<double> pooled_msd() const {
    double s = 0.0;
    std::size_t n = 0;
    for (double d : sq_dev_) {
      if (std::isnan(d)) continue;
      s += d;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  }

 private:
  const ReviewTable* table_;
  std::vector<double> sq_dev_;
};

// sigma_hat from the k most recent usable reviews (deviation from the
// leave-one-out CAS). Shorter histories fall back to everything available with
// partial_history set, or throw under strict_history.
inline ReviewerQuality empirical_sigma_from_history(const ReviewTable& table, ReviewerId reviewer,
                                                    std::size_t k = 5, const QualityConfig& cfg = {}) {
  if (k == 0) throw InvalidArgument("history length k must be positive");
  const auto idx = table.reviews_by(reviewer);
  double ss = 0.0;
  std::size_t n = 0;
  for (auto it = idx.rbegin(); it != idx.rend() && n < k; ++it) {
    const Review& r = table[*it];
    if (table.reviews_of_paper(r.paper).size() < 2) continue;
    const double d = r.score - leave_one_out_cas(table, reviewer, r.paper);
    ss += d * d;
    ++n;
  }
  if (n == 0) throw InsufficientData("insufficient history for reviewer " + std::to_string(reviewer));
  if (n < k && cfg.strict_history) {
    throw InsufficientData("reviewer " + std::to_string(reviewer) + " has " + std::to_string(n) +
                           " usable reviews, need " + std::to_string(k));
  }
  ReviewerQuality q;
  q.reviewer = reviewer;
  q.msd_from_cas = ss / static_cast<double>(n);
  q.sigma_hat = floored_sigma(*q.msd_from_cas, cfg);
  q.n_used = n;
  q.partial_history = n < k;
  return q;
}

inline AuthorQuality author_quality(const ReviewTable& table, const Authorship& authorship, UserId author,
                                    const CASMap* cas_cache = nullptr) {
  CASMap local;
  if (cas_cache == nullptr) {
    local = community_average_scores(table);
    cas_cache = &local;
  }
  AuthorQuality aq;
  aq.author = author;
  auto it = authorship.find(author);
  if (it != authorship.end()) {
    double sum = 0.0;
    for (PaperId p : it->second) {
      if (!cas_cache->has(p)) continue;
      sum += cas_cache->cas[p];
      ++aq.n_papers;
    }
    if (aq.n_papers > 0) aq.mean_own_cas = sum / static_cast<double>(aq.n_papers);
  }
  if (aq.n_papers == 0) {
    throw InsufficientData("author " + std::to_string(author) + " has no reviewed papers");
  }
  return aq;
}

// Mean rating received per ratee. Values are summed in sorted order so the
// result does not depend on record order.
inline QualityMap rating_based_quality(const RatingTable& ratings) {
  std::map<ReviewerId, std::vector<double>> received;
  for (const auto& r : ratings.records()) received[r.ratee].push_back(r.value);
  QualityMap out;
  for (auto& [ratee, vals] : received) {
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (double v : vals) sum += v;
    ReviewerQuality q;
    q.reviewer = ratee;
    q.rating_mean = sum / static_cast<double>(vals.size());
    q.n_used = vals.size();
    out.emplace(ratee, q);
  }
  return out;
}

namespace detail {

inline std::vector<double> rating_values(const QualityMap& qualities) {
  std::vector<double> v;
  v.reserve(qualities.size());
  for (const auto& [id, q] : qualities) {
    if (q.rating_mean) v.push_back(*q.rating_mean);
  }
  return v;
}

}  // namespace detail

// Reviewers whose rating_mean is at or above the `cutoff` quantile (ties kept).
inline std::set<ReviewerId> percentile_threshold_filter(const QualityMap& qualities, double cutoff = 0.80) {
  std::set<ReviewerId> out;
  const auto values = detail::rating_values(qualities);
  if (values.empty()) return out;
  const double threshold = stats::quantile(values, cutoff);
  for (const auto& [id, q] : qualities) {
    if (q.rating_mean && *q.rating_mean >= threshold) out.insert(id);
  }
  return out;
}

// Papers whose CAS is trusted: keep only reviews by reviewers at or above the
// (1 - top_reviewer_pct) rating quantile, then take the top_paper_pct of papers
// by remaining review count (ties by ascending paper id).
inline std::vector<PaperId> high_certainty_paper_subset(const ReviewTable& table, const QualityMap& qualities,
                                                        double top_reviewer_pct = 0.20,
                                                        double top_paper_pct = 0.20) {
  if (!(top_reviewer_pct > 0.0 && top_reviewer_pct <= 1.0) || !(top_paper_pct > 0.0 && top_paper_pct <= 1.0)) {
    throw InvalidArgument("percentages must lie in (0,1]");
  }
  const auto top = percentile_threshold_filter(qualities, 1.0 - top_reviewer_pct);
  std::vector<std::pair<std::size_t, PaperId>> counts;
  for (PaperId p : table.papers()) {
    std::size_t c = 0;
    for (std::size_t i : table.reviews_of_paper(p)) c += top.contains(table[i].reviewer) ? 1 : 0;
    counts.emplace_back(c, p);
  }
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const auto take = static_cast<std::size_t>(
      std::ceil(top_paper_pct * static_cast<double>(table.paper_count()) - 1e-9));
  std::vector<PaperId> out;
  for (std::size_t i = 0; i < counts.size() && i < take; ++i) {
    if (counts[i].first == 0) break;
    out.push_back(counts[i].second);
  }
  if (out.empty()) throw InsufficientData("no high-certainty papers");
  std::sort(out.begin(), out.end());
  return out;
}

// Partition rated reviewers into equal-count bins by (rating_mean, id); each
// bin's MSD is measured from its members' deviations from the CAS on the
// reference papers and becomes every member's sigma.
inline QualityMap binned_sigma(const ReviewTable& table, const QualityMap& qualities, std::size_t n_bins,
                               std::span<const PaperId> reference_papers, const QualityConfig& cfg = {}) {
  if (n_bins == 0) throw InvalidArgument("n_bins must be positive");
  std::vector<std::pair<double, ReviewerId>> order;
  for (const auto& [id, q] : qualities) {
    if (!q.rating_mean) throw InvalidArgument("binned_sigma: reviewer " + std::to_string(id) + " has no rating");
    order.emplace_back(*q.rating_mean, id);
  }
  if (order.empty()) throw InsufficientData("binned_sigma: no reviewers");
  std::sort(order.begin(), order.end());

  const std::size_t bins = std::min(n_bins, order.size());
  const std::size_t base = order.size() / bins;
  const std::size_t extra = order.size() % bins;
  std::map<ReviewerId, std::size_t> bin_of;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < len; ++k) bin_of[order[pos++].second] = b;
  }

  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> cnt(bins, 0);
  std::vector<PaperId> refs(reference_papers.begin(), reference_papers.end());
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  for (PaperId p : refs) {
    const auto idx = table.reviews_of_paper(p);
    if (idx.size() < 2) continue;  // a lone review always equals its own CAS
    double s = 0.0;
    for (std::size_t i : idx) s += table[i].score;
    const double cas = s / static_cast<double>(idx.size());
    for (std::size_t i : idx) {
      auto it = bin_of.find(table[i].reviewer);
      if (it == bin_of.end()) continue;
      const double d = table[i].score - cas;
      sum[it->second] += d * d;
      ++cnt[it->second];
    }
  }

  std::vector<std::optional<double>> bin_msd(bins);
  bool any = false;
  for (std::size_t b = 0; b < bins; ++b) {
    if (cnt[b] > 0) {
      bin_msd[b] = sum[b] / static_cast<double>(cnt[b]);
      any = true;
    }
  }
  if (!any) throw InsufficientData("binned_sigma: no deviations on reference papers");

  std::vector<double> resolved(bins);
  std::vector<bool> inherited(bins, false);
  for (std::size_t b = 0; b < bins; ++b) {
    if (bin_msd[b]) {
      resolved[b] = *bin_msd[b];
      continue;
    }
    inherited[b] = true;
    for (std::size_t dist = 1; dist < bins; ++dist) {
      if (b >= dist && bin_msd[b - dist]) {
        resolved[b] = *bin_msd[b - dist];
        break;
      }
      if (b + dist < bins && bin_msd[b + dist]) {
        resolved[b] = *bin_msd[b + dist];
        break;
      }
    }
  }

  QualityMap out = qualities;
  for (auto& [id, q] : out) {
    const std::size_t b = bin_of.at(id);
    q.bin_index = b;
    q.bin_msd = resolved[b];
    q.sigma_hat = floored_sigma(resolved[b], cfg);
    q.inherited_bin = inherited[b];
  }
  return out;
}

// Author quality (mean own CAS) as a weight, min-max normalized to
// [min_author_weight, 1]. Reviewers without reviewed papers get the median
// author weight.
inline std::map<ReviewerId, double> author_quality_weights(const ReviewTable& table, const Authorship& authorship,
                                                           const QualityConfig& cfg = {}) {
  const auto cas = community_average_scores(table);
  std::map<ReviewerId, double> raw;
  for (ReviewerId r : table.reviewers()) {
    auto it = authorship.find(r);
    if (it == authorship.end()) continue;
    try {
      raw[r] = author_quality(table, authorship, r, &cas).mean_own_cas;
    } catch (const InsufficientData&) {
    }
  }
  std::map<ReviewerId, double> out;
  if (raw.empty()) {
    for (ReviewerId r : table.reviewers()) out[r] = 1.0;
    return out;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [r, x] : raw) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<double> author_weights;
  for (const auto& [r, x] : raw) {
    const double w = hi > lo ? cfg.min_author_weight + (1.0 - cfg.min_author_weight) * (x - lo) / (hi - lo) : 1.0;
    out[r] = w;
    author_weights.push_back(w);
  }
  const double fallback = stats::median(author_weights);
  for (ReviewerId r : table.reviewers()) out.try_emplace(r, fallback);
  return out;
}

}  // namespace peerrev
