#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "peerrev/calibration.hpp"
#include "peerrev/platform.hpp"

using namespace peerrev;
using Catch::Approx;

namespace {

SimConfig tiny_config() {
  SimConfig c;
  c.years = 3;
  c.initial_users = 60;
  c.initial_papers_per_user = 2;
  c.joins_per_year = 20;
  c.churn_fraction = 0.1;
  c.reviews_per_user_year = 3;
  c.ratings_per_user_year = 4;
  c.world.bot_fraction = 0.3;
  c.world.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("policy and method names round-trip") {
  for (auto p : {AllocationPolicy::uniform, AllocationPolicy::crp, AllocationPolicy::reward_crp}) {
    CHECK(allocation_policy_from_string(to_string(p)) == p);
  }
  for (auto m : all_scoring_methods()) CHECK(scoring_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(allocation_policy_from_string("lottery"), InvalidArgument);
  CHECK_THROWS_AS(scoring_method_from_string("median"), InvalidArgument);
}

TEST_CASE("binarization boundary is inclusive at the threshold") {
  CHECK(binarize_rating(0.5) == 1.0);
  CHECK(binarize_rating(std::nextafter(0.5, 0.0)) == 0.0);
  CHECK(binarize_rating(0.0) == 0.0);
  CHECK(binarize_rating(1.0) == 1.0);
  CHECK(binarize_rating(0.3, 0.3) == 1.0);
  CHECK_THROWS_AS(binarize_rating(1.2), InvalidArgument);
}

TEST_CASE("variance reduction of one more review") {
  // prior 1/12, sigma 0.2: 1/12 - 1/(12 + 25)
  CHECK(variance_reduction(1.0 / 12.0, 0.2) == Approx(1.0 / 12.0 - 1.0 / 37.0));
  CHECK(variance_reduction(0.01, INFINITY) == 0.0);
  CHECK_THROWS_AS(variance_reduction(0.0, 0.2), InvalidArgument);
  CHECK_THROWS_AS(variance_reduction(0.1, 0.0), InvalidArgument);
  // A well-reviewed paper gains less than a fresh one.
  CHECK(variance_reduction(0.001, 0.2) < variance_reduction(1.0 / 12.0, 0.2));
  // Unit prior and unit sigma halve the variance.
  CHECK(variance_reduction(1.0, 1.0) == Approx(0.5));
  CHECK(variance_reduction(1.0, 1e9) == Approx(0.0).margin(1e-15));
  // Each additional review at fixed sigma gains strictly less.
  double var = 1.0 / 12.0, last = INFINITY;
  for (int k = 0; k < 50; ++k) {
    const double d = variance_reduction(var, 0.2);
    REQUIRE(d < last);
    last = d;
    var -= d;
  }
}

TEST_CASE("allocation probabilities") {
  const std::vector<std::size_t> counts{0, 1, 3};
  const std::vector<double> rewards{0.5, 0.5, 0.1};
  const auto u = allocation_probabilities(AllocationPolicy::uniform, counts, rewards);
  CHECK(u[0] == Approx(1.0 / 3.0));
  const auto even = allocation_probabilities(AllocationPolicy::crp, std::vector<std::size_t>{0, 0},
                                             std::vector<double>{1, 1});
  CHECK(even[0] == Approx(0.5));
  const auto skew = allocation_probabilities(AllocationPolicy::crp, std::vector<std::size_t>{9, 1},
                                             std::vector<double>{1, 1});
  CHECK(skew[0] == Approx(10.0 / 12.0));
  CHECK(skew[1] == Approx(2.0 / 12.0));
  const auto c = allocation_probabilities(AllocationPolicy::crp, counts, rewards);
  CHECK(c[0] == Approx(1.0 / 7.0));
  CHECK(c[2] == Approx(4.0 / 7.0));
  // weights 0.5, 1.0, 0.4
  const auto r = allocation_probabilities(AllocationPolicy::reward_crp, counts, rewards);
  CHECK(r[1] == Approx(1.0 / 1.9));
  CHECK_THROWS_AS(allocation_probabilities(AllocationPolicy::reward_crp, counts, std::vector<double>{0, 0, 0}),
                  InsufficientData);
  CHECK_THROWS_AS(allocation_probabilities(AllocationPolicy::crp, counts, std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("Fenwick sampler draws in proportion to weights") {
  detail::FenwickSampler f;
  const std::vector<double> w{1, 0, 3, 2, 0, 4};
  for (double x : w) f.push_back(x);
  CHECK(f.total() == Approx(10.0));
  f.add(1, 2.0);
  CHECK(f.weight(1) == 2.0);
  CHECK(f.total() == Approx(12.0));
  Rng rng = make_stream(8);
  std::vector<int> hits(w.size(), 0);
  const int n = 120000;
  for (int i = 0; i < n; ++i) ++hits[f.sample(rng)];
  const std::vector<double> expect{1, 2, 3, 2, 0, 4};
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(hits[i] / double(n) == Approx(expect[i] / 12.0).margin(0.006));
  CHECK(hits[4] == 0);
}

TEST_CASE("warm start orders non-bots by quality, then bots") {
  const std::vector<Agent> pool{{0, 0.3, false}, {1, 0.9, true}, {2, 0.8, false}, {3, 0.8, false}, {4, 0.1, false}};
  CHECK(warm_start_selection(pool, 3) == std::vector<UserId>{2, 3, 0});
  CHECK(warm_start_selection(pool, 5).back() == 1);
  CHECK_THROWS_AS(warm_start_selection(pool, 6), InvalidArgument);
}

TEST_CASE("pool hash depends on the multiset, not the order") {
  std::vector<Agent> a{{0, 0.3, false}, {1, 0.9, true}, {2, 0.8, false}};
  std::vector<Agent> b{{0, 0.8, false}, {1, 0.3, false}, {2, 0.9, true}};
  CHECK(pool_hash(a) == pool_hash(b));
  b[2].is_bot = false;
  CHECK(pool_hash(a) != pool_hash(b));
}

TEST_CASE("imputed qualities fill unrated reviewers with the rated mean") {
  ReviewTable t;
  t.add({0, 0, 0.5});
  t.add({1, 0, 0.5});
  t.add({2, 1, 0.5});
  RatingTable r;
  r.add({5, 0, 0.2});
  r.add({5, 1, 0.6});
  const auto q = reviewer_qualities_imputed(t, r);
  CHECK(*q.at(2).rating_mean == Approx(0.4));
  CHECK(q.size() == 3);
  CHECK_THROWS_AS(reviewer_qualities_imputed(t, RatingTable{}), InsufficientData);
}

TEST_CASE("scoring on a hand-built platform") {
  // Two honest reviewers (p = 0.9, 0.45) and a bot over three papers.
  const std::vector<Agent> agents{{0, 0.9, false}, {1, 0.45, false}, {2, 0.5, true}};
  const std::vector<PaperTruth> papers{{0, 0.2, 2}, {1, 0.5, 2}, {2, 0.8, 0}};
  ReviewTable t;
  t.add({0, 0, 0.25});
  t.add({1, 0, 0.1});
  t.add({2, 0, 0.9});
  t.add({0, 1, 0.5});
  t.add({2, 1, 0.1});
  t.add({1, 2, 0.7});
  RatingTable r;
  r.add({0, 1, 0.6});
  r.add({1, 0, 0.9});
  r.add({0, 2, 0.1});
  const PlatformView v{&t, &r, agents, papers, 0.18};
  ScoringConfig cfg;

  const auto mean = score_platform(v, ScoringMethod::simple_mean, cfg);
  CHECK(mean[0]->mean == Approx((0.25 + 0.1 + 0.9) / 3.0));
  CHECK(mean[1]->mean == Approx(0.3));

  // Oracle: bots dropped; sigma 0.2 and 0.4.
  const auto oracle = score_platform(v, ScoringMethod::oracle_ungated, cfg);
  CHECK(oracle[0]->mean == Approx((25.0 * 0.25 + 6.25 * 0.1) / 31.25));
  CHECK(*oracle[0]->sigma_total == Approx(std::sqrt(1.0 / 31.25)));
  CHECK(oracle[1]->mean == Approx(0.5));
  const auto gated = score_platform(v, ScoringMethod::oracle, cfg);
  CHECK_FALSE(gated[0]->published);  // sigma_total 0.179
  CHECK_FALSE(gated[2]->published);  // sigma 0.4

  // Threshold at the 0.8 quantile keeps only reviewer 0 (mean 0.9).
  const auto thr = score_platform(v, ScoringMethod::threshold_top_pct, cfg);
  CHECK(thr[0]->mean == 0.25);
  CHECK_FALSE(thr[2].has_value());

  const auto m = evaluate_estimates(papers, oracle, ScoringMethod::oracle_ungated);
  CHECK(m.n_published == 3);
  CHECK(m.coverage == 1.0);
  CHECK(m.correlation.has_value());

  const std::vector<PaperTruth> too_few{{0, 0.2, 2}};
  const PlatformView bad{&t, &r, agents, too_few, 0.18};
  CHECK_THROWS_AS(score_platform(bad, ScoringMethod::simple_mean, cfg), ValidationError);
}

TEST_CASE("evaluation counts unpublished papers against coverage only") {
  const std::vector<PaperTruth> papers{{0, 0.1, 0}, {1, 0.5, 0}, {2, 0.9, 0}, {3, 0.4, 0}};
  Estimates est(4);
  est[0] = PaperEstimate{0.2, 0.1, 2, true};
  est[1] = PaperEstimate{0.4, 0.1, 2, true};
  est[2] = PaperEstimate{0.1, 0.3, 2, false};
  const auto m = evaluate_estimates(papers, est, ScoringMethod::oracle);
  CHECK(m.n_published == 2);
  CHECK(m.coverage == 0.5);
  CHECK(*m.correlation == Approx(1.0));
  CHECK_THROWS_AS(evaluate_estimates({}, est, ScoringMethod::oracle), InsufficientData);
}

TEST_CASE("bot split separates rating means by the hidden flag") {
  const std::vector<Agent> agents{{0, 0.9, false}, {1, 0.5, true}, {2, 0.7, false}};
  RatingTable r;
  r.add({0, 1, 0.05});
  r.add({1, 0, 0.95});
  r.add({0, 2, 0.7});
  const auto s = bot_quality_split(r, agents);
  CHECK(s.bots == std::vector<double>{0.05});
  CHECK(s.humans.size() == 2);
  CHECK(s.bot_histogram[0] == 1);
  CHECK(s.human_histogram[9] == 1);
  CHECK(*s.balanced_accuracy == 1.0);
}

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.pool_size() == 500 + 2000 * 4);
  c.review_cap = 2;
  CHECK(c.review_budget() == 2);
  c.years = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.churn_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.initial_papers_per_user = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("simulation invariants hold every year") {
  for (auto policy : {AllocationPolicy::uniform, AllocationPolicy::crp, AllocationPolicy::reward_crp}) {
    auto cfg = tiny_config();
    cfg.allocation = policy;
    Simulation sim(cfg, 0);
    std::size_t reviews_before = 0;
    while (!sim.done()) {
      const auto rep = sim.step();
      const auto& s = sim.state();
      // Budget: nobody writes more than the yearly budget.
      for (std::size_t n : s.reviews_this_year) REQUIRE(n <= cfg.review_budget());
      REQUIRE(rep.reviews_written == s.reviews.size() - reviews_before);
      REQUIRE(rep.reviews_written + rep.reviews_forfeited == rep.live_users * cfg.review_budget());
      reviews_before = s.reviews.size();
      REQUIRE(std::is_sorted(s.live.begin(), s.live.end()));
      for (const auto& r : s.reviews.records()) REQUIRE(s.papers[r.paper].author != r.reviewer);
      for (const auto& r : s.ratings.records()) REQUIRE(r.rater != r.ratee);
      std::vector<std::size_t> counts(s.papers.size(), 0);
      for (const auto& r : s.reviews.records()) ++counts[r.paper];
      REQUIRE(counts == s.review_count);
      REQUIRE(rep.methods.size() == cfg.methods.size());
    }
    CHECK(sim.state().year == cfg.years);
    CHECK_THROWS_AS(sim.step(), InvalidArgument);
  }
}

TEST_CASE("population follows onboarding and churn") {
  auto cfg = tiny_config();
  Simulation sim(cfg, 0);
  auto y1 = sim.step();
  CHECK(y1.joined == 60);
  CHECK(y1.churned == 0);
  CHECK(y1.live_users == 60);
  CHECK(y1.n_papers == 120);
  auto y2 = sim.step();
  CHECK(y2.joined == 20);
  CHECK(y2.churned == 6);
  CHECK(y2.live_users == 74);
  CHECK(y2.n_papers == 160);
  CHECK(sim.state().pool.size() == cfg.pool_size());
}

TEST_CASE("binary ratings are stored as 0/1") {
  auto cfg = tiny_config();
  cfg.binary_ratings = true;
  Simulation sim(cfg, 1);
  sim.step();
  CHECK(sim.state().ratings.is_binary());
  CHECK_FALSE(sim.state().ratings.empty());
}

TEST_CASE("simulation is a pure function of (config, replicate)") {
  const auto cfg = tiny_config();
  const auto a = run_simulation(cfg, 3), b = run_simulation(cfg, 3), c = run_simulation(cfg, 4);
  CHECK(a.pool_hash == b.pool_hash);
  REQUIRE(a.years.size() == b.years.size());
  for (std::size_t y = 0; y < a.years.size(); ++y) {
    for (std::size_t m = 0; m < a.years[y].methods.size(); ++m) {
      REQUIRE(a.years[y].methods[m].correlation == b.years[y].methods[m].correlation);
      REQUIRE(a.years[y].methods[m].coverage == b.years[y].methods[m].coverage);
    }
  }
  CHECK(a.pool_hash != c.pool_hash);
}

TEST_CASE("warm start reorders the same pool") {
  auto cfg = tiny_config();
  Simulation base(cfg, 2);
  cfg.warm_start = true;
  Simulation warm(cfg, 2);
  CHECK(pool_hash(base.state().pool) == pool_hash(warm.state().pool));
  warm.step();
  // The first cohort is the best non-bots.
  const auto best = warm_start_selection(warm.state().pool, cfg.initial_users);
  std::vector<UserId> sorted_best(best.begin(), best.end());
  std::sort(sorted_best.begin(), sorted_best.end());
  CHECK(warm.state().live == sorted_best);
}

TEST_CASE("review cap limits the yearly budget") {
  auto cfg = tiny_config();
  cfg.review_cap = 1;
  Simulation sim(cfg, 0);
  const auto rep = sim.step();
  CHECK(rep.reviews_written <= rep.live_users);
  for (std::size_t n : sim.state().reviews_this_year) REQUIRE(n <= 1);
}

TEST_CASE("exhausted reviewers forfeit their remaining budget") {
  SimConfig cfg;
  cfg.years = 1;
  cfg.initial_users = 3;
  cfg.initial_papers_per_user = 1;
  cfg.joins_per_year = 0;
  cfg.reviews_per_user_year = 5;
  cfg.ratings_per_user_year = 1;
  cfg.methods = {ScoringMethod::simple_mean};
  Simulation sim(cfg, 0);
  const auto rep = sim.step();
  // Each user can review only the two papers they did not write.
  CHECK(rep.reviews_written == 6);
  CHECK(rep.reviews_forfeited == 9);
}

TEST_CASE("reward-CRP flattens coverage relative to CRP") {
  auto cfg = tiny_config();
  cfg.years = 2;
  cfg.churn_fraction = 0.0;
  cfg.allocation = AllocationPolicy::crp;
  const auto crp = run_simulation(cfg, 0);
  cfg.allocation = AllocationPolicy::reward_crp;
  const auto reward = run_simulation(cfg, 0);
  CHECK(reward.years.back().review_concentration.gini < crp.years.back().review_concentration.gini);
}

TEST_CASE("noiseless one-year run: every estimator tracks the truth") {
  SimConfig c;
  c.years = 1;
  c.initial_users = 200;
  c.initial_papers_per_user = 1;
  c.world.alpha = 1e-9;
  c.world.seed = 6;
  const auto rep = run_simulation(c);
  for (auto m : {ScoringMethod::simple_mean, ScoringMethod::bayes_binned, ScoringMethod::bayes_direct_sd,
                 ScoringMethod::oracle}) {
    const auto& mm = rep.years.back().metrics(m);
    REQUIRE(mm.correlation.has_value());
    CHECK(*mm.correlation > 0.99);
  }
}

TEST_CASE("calibration: pairwise r falls with alpha and the fit round-trips") {
  WorldConfig w;
  w.seed = 12;
  CalibrationOptions opt;
  opt.shape = ConferenceShape{150, 150, 5, false};
  opt.replicates = 3;
  opt.tolerance = 0.005;
  CHECK(simulated_pairwise_r(w, 0.001, opt.shape, 2) > 0.99);
  double last = 1.0;
  for (double a : {0.05, 0.1, 0.2, 0.4}) {
    const double r = simulated_pairwise_r(w, a, opt.shape, opt.replicates);
    CHECK(r < last);
    last = r;
  }
  const auto fit = calibrate_alpha(0.3, w, opt);
  CHECK(std::abs(fit.achieved_r - 0.3) <= opt.tolerance);
  CHECK(simulated_pairwise_r(w, fit.alpha, opt.shape, opt.replicates) == fit.achieved_r);
  try {
    calibrate_alpha(0.999, w, opt);
    FAIL("expected an error");
  } catch (const InsufficientData& e) {
    CHECK(std::string(e.what()).find("unreachable") != std::string::npos);
  }
  CHECK_THROWS_AS(calibrate_alpha(1.5, w, opt), InvalidArgument);
}

TEST_CASE("reward-CRP with a constant reward is plain CRP") {
  Rng rng = make_stream(40);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::size_t> counts(1 + uniform_index(rng, 20));
    for (auto& c : counts) c = uniform_index(rng, 30);
    const std::vector<double> flat(counts.size(), 0.01 + uniform01(rng));
    const auto a = allocation_probabilities(AllocationPolicy::crp, counts, flat);
    const auto b = allocation_probabilities(AllocationPolicy::reward_crp, counts, flat);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(b[i] == Approx(a[i]).epsilon(1e-12));
  }
}

TEST_CASE("identical honest reviewers make every method agree with the mean") {
  const std::vector<Agent> agents{{0, 0.6, false}, {1, 0.6, false}, {2, 0.6, false}, {3, 0.6, false}};
  std::vector<PaperTruth> papers;
  ReviewTable varied, consensus;
  RatingTable r;
  Rng rng = make_stream(41);
  for (PaperId p = 0; p < 12; ++p) {
    const UserId author = p % 4;
    papers.push_back({p, uniform01(rng), author});
    const double q = papers.back().true_quality;
    for (ReviewerId k = 0; k < 4; ++k) {
      if (k == author) continue;
      varied.add({k, p, uniform01(rng)});
      consensus.add({k, p, q});
    }
  }
  for (UserId a = 0; a < 4; ++a) r.add({a, (a + 1) % 4, 0.5});
  ScoringConfig cfg;
  cfg.certainty = CertaintyPolicy(1e9);

  // Equal true spreads: oracle weights are uniform.
  const PlatformView v{&varied, &r, agents, papers, 0.18};
  const auto mean = score_platform(v, ScoringMethod::simple_mean, cfg);
  for (auto m : {ScoringMethod::oracle, ScoringMethod::oracle_ungated}) {
    const auto e = score_platform(v, m, cfg);
    for (PaperId p = 0; p < 12; ++p) CHECK(e[p]->mean == Approx(mean[p]->mean).epsilon(1e-12));
  }
  // Agreeing scores: every method returns the common score.
  const PlatformView w{&consensus, &r, agents, papers, 0.18};
  for (auto m : all_scoring_methods()) {
    const auto e = score_platform(w, m, cfg);
    for (PaperId p = 0; p < 12; ++p) {
      REQUIRE(e[p].has_value());
      CHECK(e[p]->mean == Approx(papers[p].true_quality).epsilon(1e-12));
    }
  }
}
