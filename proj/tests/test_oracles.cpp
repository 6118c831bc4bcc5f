#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "peerrev/peerrev.hpp"

using namespace peerrev;

namespace {

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = detail::average_ranks(x), ry = detail::average_ranks(y);
  return *stats::pearson(rx, ry);
}

// per_ratee ratings of every agent, each from a uniformly chosen other agent.
RatingTable rate_everyone(const World& w, const WorldConfig& cfg, std::size_t per_ratee, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 9);
  RatingTable out;
  const std::size_t n = w.agents.size();
  for (const auto& ratee : w.agents) {
    for (std::size_t k = 0; k < per_ratee; ++k) {
      std::size_t j = uniform_index(rng, n - 1);
      if (j >= ratee.id) ++j;
      const auto g = generate_rating(w.agents[j], ratee, cfg, rng);
      out.add({g.actor, g.target, g.value, 0});
    }
  }
  return out;
}

// Mean of Normal(mu, sd) truncated to [0,1].
double truncated_mean(double mu, double sd) {
  const auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::acos(-1.0)); };
  const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  const double a = (0.0 - mu) / sd, b = (1.0 - mu) / sd;
  return mu + sd * (pdf(a) - pdf(b)) / (cdf(b) - cdf(a));
}

double mean_abs_cas_error(const Conference& c, const WorldConfig& w, bool against_expected) {
  const auto cas = community_average_scores(c.reviews);
  double e = 0.0;
  for (const auto& p : c.world.papers) {
    double target = p.true_quality;
    if (against_expected) {
      target = 0.0;
      const auto idx = c.reviews.reviews_of_paper(p.id);
      for (std::size_t i : idx) {
        const Agent& a = c.world.agents[c.reviews[i].reviewer];
        target += a.is_bot ? 0.5 : truncated_mean(p.true_quality, a.noise_sd(w.alpha));
      }
      target /= static_cast<double>(idx.size());
    }
    e += std::abs(cas.at(p.id) - target);
  }
  return e / static_cast<double>(c.world.papers.size());
}

}  // namespace

TEST_CASE("CAS converges to the expected bounded score as reviews accumulate") {
  WorldConfig w;
  w.seed = 41;
  const double few = mean_abs_cas_error(make_conference(w, ConferenceShape{400, 300, 3, false}), w, true);
  const double many = mean_abs_cas_error(make_conference(w, ConferenceShape{400, 300, 100, false}), w, true);
  CHECK(many < 0.25 * few);
}

TEST_CASE("CAS converges to the true quality when bounds rarely bind") {
  WorldConfig w;
  w.seed = 41;
  w.alpha = 0.05;
  w.reviewer_quality_floor = 0.5;
  w.paper_quality = QualityDist::beta(20.0, 20.0);
  const double few = mean_abs_cas_error(make_conference(w, ConferenceShape{400, 300, 3, false}), w, false);
  const double many = mean_abs_cas_error(make_conference(w, ConferenceShape{400, 300, 100, false}), w, false);
  CHECK(many < 0.25 * few);
  CHECK(many < 0.01);
}

TEST_CASE("leave-one-out sigma recovers the true reviewer spread") {
  WorldConfig w;
  w.seed = 42;
  w.alpha = 0.05;
  w.reviewer_quality_floor = 0.5;
  w.paper_quality = QualityDist::beta(20.0, 20.0);
  const std::size_t per = 20;
  const auto c = make_conference(w, ConferenceShape{300, 3000, per, false});
  double mean_var = 0.0;
  for (const auto& a : c.world.agents) mean_var += std::pow(a.noise_sd(w.alpha), 2);
  mean_var /= 300.0;
  // The leave-one-out CAS carries the co-reviewers' noise averaged over per-1 reviews.
  const double bias = mean_var / static_cast<double>(per - 1);
  std::vector<double> rel, est, truth;
  for (const auto& a : c.world.agents) {
    const auto q = reviewer_msd_from_cas(c.reviews, a.id);
    const double expect = std::sqrt(std::pow(a.noise_sd(w.alpha), 2) + bias);
    rel.push_back(std::abs(*q.sigma_hat - expect) / expect);
    est.push_back(*q.sigma_hat);
    truth.push_back(a.noise_sd(w.alpha));
  }
  // About 200 reviews each: relative sampling error near 1/sqrt(400).
  CHECK(stats::median(rel) < 0.06);
  CHECK(*std::max_element(rel.begin(), rel.end()) < 0.25);
  CHECK(spearman(est, truth) > 0.95);
}

TEST_CASE("received ratings rank honest reviewers by true quality") {
  WorldConfig w;
  w.seed = 43;
  const auto world = sample_world(w, 200);
  const auto q = rating_based_quality(rate_everyone(world, w, 200, 43));
  std::vector<double> r, p;
  for (const auto& a : world.agents) {
    r.push_back(*q.at(a.id).rating_mean);
    p.push_back(a.true_quality);
  }
  CHECK(spearman(r, p) > 0.8);
}

TEST_CASE("rating bins, high-certainty papers and author weights on a synthetic conference") {
  WorldConfig w;
  w.seed = 44;
  // Large enough that per-bin sampling error stays below the spread between bins.
  const auto c = make_conference(w, ConferenceShape{589, 3000, 9, false});
  const auto ratings = rating_based_quality(rate_everyone(c.world, w, 100, 44));
  const auto refs = high_certainty_paper_subset(c.reviews, ratings);

  // Trusted papers have CAS closer to the truth than the average paper.
  const auto cas = community_average_scores(c.reviews);
  const auto err = [&](PaperId p) { return std::pow(cas.at(p) - c.world.papers[p].true_quality, 2); };
  double all = 0.0, sub = 0.0;
  for (PaperId p : c.reviews.papers()) all += err(p);
  for (PaperId p : refs) sub += err(p);
  CHECK(sub / static_cast<double>(refs.size()) < all / static_cast<double>(c.reviews.paper_count()));

  // Bin sigma falls with bin rating. Adjacent top bins differ by less than
  // their sampling error, so the order is checked by rank correlation.
  const auto b = binned_sigma(c.reviews, ratings, 10, refs);
  std::vector<double> bin_sigma(10, -1.0), bin_rank(10);
  for (const auto& [id, x] : b) bin_sigma[*x.bin_index] = *x.sigma_hat;
  for (std::size_t k = 0; k < 10; ++k) bin_rank[k] = static_cast<double>(k);
  CHECK(spearman(bin_rank, bin_sigma) < -0.9);
  CHECK(bin_sigma.back() < 0.75 * bin_sigma.front());

  // Author quality is unrelated to reviewing skill here.
  std::vector<double> aq, msd;
  for (const auto& [author, papers] : c.authorship) {
    aq.push_back(author_quality(c.reviews, c.authorship, author).mean_own_cas);
    msd.push_back(*reviewer_msd_from_cas(c.reviews, author).msd_from_cas);
  }
  CHECK(std::abs(*stats::pearson(aq, msd)) < 0.15);
  const auto cmp = compare_weightings(c);
  CHECK(std::abs(cmp.msd_author_weighted - cmp.msd_simple_mean) < 0.1 * cmp.msd_simple_mean);
  CHECK(cmp.msd_reviewer_weighted < cmp.msd_simple_mean);
}

TEST_CASE("with half the users bots, the rating filter keeps some of each") {
  WorldConfig w;
  w.seed = 45;
  w.bot_fraction = 0.5;
  const auto world = sample_world(w, 500);
  const auto kept = percentile_threshold_filter(rating_based_quality(rate_everyone(world, w, 3, 45)));
  std::size_t bots = 0;
  for (UserId id : kept) bots += world.agents[id].is_bot ? 1 : 0;
  CHECK(bots > 0);
  CHECK(bots < kept.size());
}
