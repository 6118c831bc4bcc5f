#pragma once

// Small statistics toolkit shared by the estimators, the analysis layer and the
// experiment harness.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "peerrev/error.hpp"

namespace peerrev::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientData("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample variance (n - 1 denominator).
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientData("variance needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw InsufficientData("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Linear-interpolation quantile (Hyndman-Fan type 7, the numpy default).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InsufficientData("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

// Two-sided p-value of a Student t statistic.
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) return 1.0;
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

struct Correlation {
  double r = 0.0;
  double stderr_r = 0.0;
  std::size_t n = 0;
  double p_value = 1.0;
};

// Pearson correlation from accumulated moments. `n_eff` is the number of
// independent observations used for the standard error and p-value; it can be
// smaller than the number of accumulated points (symmetrized pairs).
struct PearsonAccumulator {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

  void add(double x, double y) {
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }

  [[nodiscard]] std::optional<double> r() const {
    if (n < 2) return std::nullopt;
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    if (!(vx > 0.0) || !(vy > 0.0)) return std::nullopt;
    return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
  }
};

inline Correlation correlation_result(double r, std::size_t n_eff) {
  Correlation c;
  c.r = r;
  c.n = n_eff;
  if (n_eff > 2) {
    const double df = static_cast<double>(n_eff - 2);
    const double one_minus = std::max(1.0 - r * r, 0.0);
    c.stderr_r = std::sqrt(one_minus / df);
    c.p_value = one_minus == 0.0 ? 0.0 : t_two_sided_p(r * std::sqrt(df / one_minus), df);
  }
  return c;
}

// Pearson r of two equal-length samples; nullopt when undefined (n < 2 or a
// constant sample).
inline std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  // Two-pass for accuracy.
  if (xs.size() < 2) return std::nullopt;
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// P(X >= k) for X ~ Binomial(n, 1/2): one-sided sign-test p-value for k wins.
inline double sign_test_p(std::size_t wins, std::size_t n) {
  if (wins > n) throw InvalidArgument("sign test: wins > n");
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    // log C(n,k) - n log 2
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  static_cast<double>(n) * std::log(2.0));
  }
  return std::min(p, 1.0);
}

// Two-sided paired t-test on differences.
inline double paired_t_p(std::span<const double> diffs) {
  if (diffs.size() < 2) throw InsufficientData("paired t-test needs two pairs");
  const double m = mean(diffs);
  const double v = variance(diffs);
  if (v == 0.0) return m == 0.0 ? 1.0 : 0.0;
  const double t = m / std::sqrt(v / static_cast<double>(diffs.size()));
  return t_two_sided_p(t, static_cast<double>(diffs.size() - 1));
}

// Gini coefficient of nonnegative counts: sum_ij |x_i - x_j| / (2 n^2 mean).
inline double gini(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientData("gini of empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total == 0.0) return 0.0;
  // sum_ij |xi - xj| = 2 sum_i (2i - n + 1) x_(i) for ascending order
  double acc = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += (2.0 * static_cast<double>(i) - n + 1.0) * v[i];
  }
  return acc / (n * total);
}

// Best balanced accuracy (mean of the two class recalls) of a single threshold
// separating `low` (expected below) from `high` (expected at or above).
inline double threshold_balanced_accuracy(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || high.empty()) throw InsufficientData("both classes must be nonempty");
  std::sort(low.begin(), low.end());
  std::sort(high.begin(), high.end());
  std::vector<double> cuts;
  cuts.reserve(low.size() + high.size() + 1);
  cuts.insert(cuts.end(), low.begin(), low.end());
  cuts.insert(cuts.end(), high.begin(), high.end());
  cuts.push_back(std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double t : cuts) {
    const auto below_low = std::lower_bound(low.begin(), low.end(), t) - low.begin();
    const auto below_high = std::lower_bound(high.begin(), high.end(), t) - high.begin();
    const double tpr = static_cast<double>(below_low) / static_cast<double>(low.size());
    const double tnr = 1.0 - static_cast<double>(below_high) / static_cast<double>(high.size());
    best = std::max({best, 0.5 * (tpr + tnr), 0.5 * ((1.0 - tpr) + (1.0 - tnr))});
  }
  return best;
}

}  // namespace peerrev::stats
