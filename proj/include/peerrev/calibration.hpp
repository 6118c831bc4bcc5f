#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>

#include "peerrev/analysis.hpp"
#include "peerrev/error.hpp"
#include "peerrev/genmodel.hpp"

namespace peerrev {

struct CalibrationOptions {
  ConferenceShape shape;  // defaults: 589 reviewers, 527 papers, 9 reviews each
  double alpha_lo = 0.02;
  double alpha_hi = 1.0;
  double tolerance = 0.002;  // on r
  int max_iterations = 60;
  std::size_t replicates = 10;
};

struct CalibrationResult {
  double alpha = 0.0;
  double achieved_r = 0.0;
  int iterations = 0;
};

// Mean pairwise reviewer correlation of conference tables generated at `alpha`.
// Replicate streams depend only on cfg.seed, so every alpha sees the same
// underlying randomness.
inline double simulated_pairwise_r(WorldConfig cfg, double alpha, const ConferenceShape& shape,
                                   std::size_t replicates) {
  cfg.alpha = alpha;
  double sum = 0.0;
  for (std::size_t k = 0; k < replicates; ++k) {
    sum += pairwise_reviewer_correlation(make_conference(cfg, shape, k).reviews).r;
  }
  return sum / static_cast<double>(replicates);
}

// Bisection on alpha (pairwise r falls as alpha grows) until the simulated r is
// within tolerance of the target.
inline CalibrationResult calibrate_alpha(double target_r, const WorldConfig& cfg,
                                         const CalibrationOptions& opt = {}) {
  if (!(target_r > 0.0 && target_r < 1.0)) throw InvalidArgument("target r must lie in (0,1)");
  if (!(opt.alpha_lo > 0.0 && opt.alpha_lo < opt.alpha_hi)) throw InvalidArgument("bad alpha bracket");
  if (opt.replicates == 0) throw InvalidArgument("replicates must be positive");
  double lo = opt.alpha_lo, hi = opt.alpha_hi;
  const double r_lo = simulated_pairwise_r(cfg, lo, opt.shape, opt.replicates);
  const double r_hi = simulated_pairwise_r(cfg, hi, opt.shape, opt.replicates);
  if (!(target_r <= r_lo && target_r >= r_hi)) {
    std::ostringstream msg;
    msg << "target r=" << target_r << " unreachable: alpha in [" << lo << ", " << hi << "] gives r in [" << r_hi
        << ", " << r_lo << "]";
    throw InsufficientData(msg.str());
  }
  CalibrationResult res;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = simulated_pairwise_r(cfg, mid, opt.shape, opt.replicates);
    res = {mid, r, it};
    if (std::fabs(r - target_r) <= opt.tolerance || hi - lo < 1e-6) break;
    if (r > target_r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return res;
}

}  // namespace peerrev
