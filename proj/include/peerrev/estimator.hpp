#pragma once

// Score aggregation kernel: simple mean, inverse-variance weighting, the
// analytic mean-squared-deviation formulas and the certainty gate. Everything
// here is a pure function of its arguments.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerrev/error.hpp"
#include "peerrev/types.hpp"

namespace peerrev {

struct ScoreSample {
  double value = 0.0;
  ReviewerId source = kNoUser;
};

struct ReviewerPrecision {
  double sigma = 1.0;
  double weight = 0.0;
};

struct PaperEstimate {
  double mean = 0.0;
  std::optional<double> sigma_total;  // standard deviation, score units
  std::size_t n_reviews = 0;
  bool published = true;  // cleared by certainty_gate
};

// Publish only when sigma_total < sigma_max (strict).
struct CertaintyPolicy {
  double sigma_max = 0.15;

  explicit CertaintyPolicy(double max = 0.15) : sigma_max(max) {
    if (!(sigma_max > 0.0)) throw InvalidArgument("sigma_max must be positive");
  }
};

namespace detail {

inline void require_positive_sigmas(std::span<const double> sigmas) {
  if (sigmas.empty()) throw InvalidArgument("no reviews");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("sigma must be positive and finite, got " + std::to_string(s));
    }
  }
}

inline void require_finite(std::span<const ScoreSample> scores) {
  for (const auto& s : scores) {
    if (!std::isfinite(s.value)) throw InvalidArgument("score must be finite");
  }
}

}  // namespace detail

// MSD of the simple mean: sum(sigma_i^2) / n^2.
inline double msd_simple(std::span<const double> sigmas, std::size_t n) {
  detail::require_positive_sigmas(sigmas);
  if (n != sigmas.size()) throw InvalidArgument("msd_simple: n must equal the number of sigmas");
  double ss = 0.0;
  for (double s : sigmas) ss += s * s;
  const double dn = static_cast<double>(n);
  return ss / (dn * dn);
}

inline double msd_simple(std::span<const double> sigmas) { return msd_simple(sigmas, sigmas.size()); }

// MSD of the inverse-variance weighted mean: 1 / sum(1/sigma_i^2).
inline double msd_bayes(std::span<const double> sigmas) {
  detail::require_positive_sigmas(sigmas);
  double precision = 0.0;
  for (double s : sigmas) precision += 1.0 / (s * s);
  return 1.0 / precision;
}

// Weights w_i = (1/sigma_i^2) / sum_k(1/sigma_k^2), in input order.
inline std::vector<ReviewerPrecision> weights_from_sigmas(std::span<const double> sigmas) {
  detail::require_positive_sigmas(sigmas);
  // Factor out the smallest sigma so the precisions stay O(1); this also makes
  // the weights exactly invariant to a common power-of-two scaling.
  double smin = sigmas[0];
  for (double s : sigmas) smin = std::min(smin, s);
  std::vector<double> rel(sigmas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double r = smin / sigmas[i];
    rel[i] = r * r;
    total += rel[i];
  }
  std::vector<ReviewerPrecision> out(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    out[i].sigma = sigmas[i];
    out[i].weight = rel[i] / total;
  }
  return out;
}

// Arithmetic mean. sigma_total is filled only when per-reviewer sigmas are given
// (then sqrt of msd_simple).
inline PaperEstimate simple_mean(std::span<const ScoreSample> scores,
                                 std::optional<std::span<const double>> sigmas = std::nullopt) {
  if (scores.empty()) throw InsufficientData("no reviews");
  detail::require_finite(scores);
  double sum = 0.0;
  for (const auto& s : scores) sum += s.value;
  PaperEstimate est;
  est.n_reviews = scores.size();
  est.mean = sum / static_cast<double>(scores.size());
  if (sigmas) {
    if (sigmas->size() != scores.size()) throw InvalidArgument("simple_mean: length mismatch");
    est.sigma_total = std::sqrt(msd_simple(*sigmas));
  }
  return est;
}

inline PaperEstimate inverse_variance_mean(std::span<const ScoreSample> scores,
                                           std::span<const double> sigmas) {
  if (scores.size() != sigmas.size()) throw InvalidArgument("inverse_variance_mean: length mismatch");
  if (scores.empty()) throw InsufficientData("no reviews");
  detail::require_finite(scores);
  const auto weights = weights_from_sigmas(sigmas);
  PaperEstimate est;
  est.n_reviews = scores.size();
  double m = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) m += weights[i].weight * scores[i].value;
  est.mean = m;
  est.sigma_total = std::sqrt(msd_bayes(sigmas));
  return est;
}

inline PaperEstimate certainty_gate(PaperEstimate estimate, const CertaintyPolicy& policy) {
  if (!estimate.sigma_total) throw InvalidArgument("certainty_gate: estimate has no sigma_total");
  estimate.published = *estimate.sigma_total < policy.sigma_max;
  return estimate;
}

}  // namespace peerrev
