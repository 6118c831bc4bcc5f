#pragma once

// Generative model of an open review platform: hidden paper qualities q_j,
// reviewer qualities p_i, review scores ~ N(q_j, alpha/p_i) and ratings of
// reviewers ~ N(p_j, alpha/p_i), both restricted to [0,1]; bots emit
// Uniform[0,1] regardless of quality.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "peerrev/error.hpp"
#include "peerrev/rng.hpp"
#include "peerrev/tables.hpp"
#include "peerrev/types.hpp"

namespace peerrev {

enum class ClampMode { clamp, resample };

inline std::string to_string(ClampMode m) { return m == ClampMode::clamp ? "clamp" : "resample"; }

inline ClampMode clamp_mode_from_string(const std::string& s) {
  if (s == "clamp") return ClampMode::clamp;
  if (s == "resample") return ClampMode::resample;
  throw InvalidArgument("unknown clamp mode '" + s + "'");
}

// Distribution over (0,1): Uniform or Beta(a, b).
struct QualityDist {
  enum class Kind { uniform, beta };
  Kind kind = Kind::uniform;
  double a = 1.0;
  double b = 1.0;

  static QualityDist uniform() { return {}; }
  static QualityDist beta(double a, double b) { return {Kind::beta, a, b}; }

  void validate() const {
    if (kind == Kind::beta && !(a > 0.0 && b > 0.0)) throw InvalidArgument("beta parameters must be positive");
  }

  // Strictly inside (0,1).
  double sample(Rng& rng) const {
    for (;;) {
      double x;
      if (kind == Kind::uniform) {
        x = uniform01(rng);
      } else {
        std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
        const double u = ga(rng), v = gb(rng);
        x = u / (u + v);
      }
      if (x > 0.0 && x < 1.0) return x;
    }
  }

  friend bool operator==(const QualityDist&, const QualityDist&) = default;
};

struct WorldConfig {
  double alpha = 0.18;
  double bot_fraction = 0.0;
  QualityDist paper_quality = QualityDist::uniform();
  QualityDist reviewer_quality = QualityDist::uniform();
  // Non-bot p_i is mapped affinely onto [floor, 1) so alpha/p_i stays bounded.
  double reviewer_quality_floor = 0.05;
  ClampMode clamp_mode = ClampMode::resample;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    if (!(bot_fraction >= 0.0 && bot_fraction <= 1.0)) throw InvalidArgument("bot_fraction must lie in [0,1]");
    if (!(reviewer_quality_floor > 0.0 && reviewer_quality_floor < 1.0)) {
      throw InvalidArgument("reviewer_quality_floor must lie in (0,1)");
    }
    paper_quality.validate();
    reviewer_quality.validate();
  }

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

struct Agent {
  UserId id = kNoUser;
  double true_quality = 0.5;  // p_i; meaningless for bots
  bool is_bot = false;

  [[nodiscard]] double noise_sd(double alpha) const { return alpha / true_quality; }
  // What an honest rater sees: bots have reviewer quality 0.
  [[nodiscard]] double quality_as_ratee() const { return is_bot ? 0.0 : true_quality; }
};

struct PaperTruth {
  PaperId id = 0;
  double true_quality = 0.5;  // q_j
  UserId author = kNoUser;
};

struct GeneratedReview {
  UserId actor = kNoUser;
  PaperId target = 0;
  double value = 0.0;
  std::uint32_t year = 0;
};

struct GeneratedRating {
  UserId actor = kNoUser;
  UserId target = kNoUser;
  double value = 0.0;
  std::uint32_t year = 0;
};

struct World {
  std::vector<Agent> agents;  // agents[i].id == i
  std::vector<PaperTruth> papers;  // papers[j].id == j
};

// Normal(mean, sd) restricted to [0,1]: clamped, or redrawn until it lands
// inside (after many misses it falls back to clamping).
inline double bounded_normal(double mean, double sd, ClampMode mode, Rng& rng) {
  if (mode == ClampMode::resample) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double x = mean + sd * standard_normal(rng);
      if (x >= 0.0 && x <= 1.0) return x;
    }
  }
  return std::clamp(mean + sd * standard_normal(rng), 0.0, 1.0);
}

inline double sample_reviewer_quality(const WorldConfig& cfg, Rng& rng) {
  const double u = cfg.reviewer_quality.sample(rng);
  return cfg.reviewer_quality_floor + (1.0 - cfg.reviewer_quality_floor) * u;
}

// n agents with ids [first_id, first_id + n); exactly round(bot_fraction * n) bots.
inline std::vector<Agent> sample_agents(const WorldConfig& cfg, std::size_t n, Rng& rng, UserId first_id = 0) {
  cfg.validate();
  std::vector<Agent> agents(n);
  for (std::size_t i = 0; i < n; ++i) {
    agents[i].id = first_id + static_cast<UserId>(i);
    agents[i].true_quality = sample_reviewer_quality(cfg, rng);
  }
  const auto n_bots = static_cast<std::size_t>(std::llround(cfg.bot_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first n_bots slots become bots.
  for (std::size_t i = 0; i < n_bots; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(order[i], order[j]);
    agents[order[i]].is_bot = true;
  }
  return agents;
}

inline PaperTruth sample_paper(const WorldConfig& cfg, PaperId id, UserId author, Rng& rng) {
  return PaperTruth{id, cfg.paper_quality.sample(rng), author};
}

// A world of n_agents users, each authoring papers_per_agent papers. Fully
// determined by cfg.seed.
inline World sample_world(const WorldConfig& cfg, std::size_t n_agents, std::size_t papers_per_agent = 1) {
  cfg.validate();
  Rng rng = make_stream(cfg.seed, 0, 0);
  World w;
  w.agents = sample_agents(cfg, n_agents, rng);
  w.papers.reserve(n_agents * papers_per_agent);
  for (std::size_t a = 0; a < n_agents; ++a) {
    for (std::size_t k = 0; k < papers_per_agent; ++k) {
      w.papers.push_back(sample_paper(cfg, static_cast<PaperId>(w.papers.size()), static_cast<UserId>(a), rng));
    }
  }
  return w;
}

inline GeneratedReview generate_review(const Agent& agent, const PaperTruth& paper, const WorldConfig& cfg, Rng& rng,
                                       std::uint32_t year = 0) {
  GeneratedReview out{agent.id, paper.id, 0.0, year};
  if (agent.is_bot) {
    out.value = uniform01(rng);
    return out;
  }
  if (!(agent.true_quality > 0.0)) throw InvalidArgument("non-bot reviewer quality must be positive");
  out.value = bounded_normal(paper.true_quality, agent.noise_sd(cfg.alpha), cfg.clamp_mode, rng);
  return out;
}

inline GeneratedRating generate_rating(const Agent& rater, const Agent& ratee, const WorldConfig& cfg, Rng& rng,
                                       std::uint32_t year = 0) {
  if (rater.id == ratee.id) throw InvalidArgument("self-rating");
  GeneratedRating out{rater.id, ratee.id, 0.0, year};
  if (rater.is_bot) {
    out.value = uniform01(rng);
    return out;
  }
  if (!(rater.true_quality > 0.0)) throw InvalidArgument("non-bot rater quality must be positive");
  out.value = bounded_normal(ratee.quality_as_ratee(), rater.noise_sd(cfg.alpha), cfg.clamp_mode, rng);
  return out;
}

// A conference-shaped data set: every paper reviewed by `reviews_per_paper`
// distinct non-author reviewers drawn uniformly. Optional self-reported
// confidence on a 1..5 scale tracks the reviewer's precision (bots report a
// random level).
struct Conference {
  World world;
  ReviewTable reviews;
  Authorship authorship;
};

struct ConferenceShape {
  std::size_t n_reviewers = 589;
  std::size_t n_papers = 527;
  std::size_t reviews_per_paper = 9;
  bool with_confidence = false;
};

inline Conference make_conference(const WorldConfig& cfg, const ConferenceShape& shape, std::uint64_t replicate = 0) {
  cfg.validate();
  if (shape.n_reviewers < shape.reviews_per_paper + 1) {
    throw InvalidArgument("not enough reviewers for the requested reviews per paper");
  }
  Rng rng = make_stream(cfg.seed, replicate, 0);
  Conference c;
  c.world.agents = sample_agents(cfg, shape.n_reviewers, rng);
  std::vector<UserId> authors(shape.n_reviewers);
  std::iota(authors.begin(), authors.end(), 0);
  std::shuffle(authors.begin(), authors.end(), rng);
  for (std::size_t j = 0; j < shape.n_papers; ++j) {
    const UserId author = authors[j % authors.size()];
    c.world.papers.push_back(sample_paper(cfg, static_cast<PaperId>(j), author, rng));
    c.authorship[author].insert(static_cast<PaperId>(j));
  }
  std::vector<UserId> pick(shape.n_reviewers);
  for (const auto& paper : c.world.papers) {
    std::iota(pick.begin(), pick.end(), 0);
    std::size_t chosen = 0;
    for (std::size_t i = 0; chosen < shape.reviews_per_paper; ++i) {
      const std::size_t j = i + uniform_index(rng, pick.size() - i);
      std::swap(pick[i], pick[j]);
      const Agent& a = c.world.agents[pick[i]];
      if (a.id == paper.author) continue;
      const auto g = generate_review(a, paper, cfg, rng);
      Review r{a.id, paper.id, g.value, std::nullopt, 0};
      if (shape.with_confidence) {
        const double level = a.is_bot ? 1.0 + static_cast<double>(uniform_index(rng, 5))
                                      : std::min(5.0, 1.0 + std::floor(5.0 * a.true_quality));
        r.confidence = level;
      }
      c.reviews.add(r);
      ++chosen;
    }
  }
  return c;
}

}  // namespace peerrev
