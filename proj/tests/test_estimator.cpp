#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "peerrev/estimator.hpp"
#include "peerrev/rng.hpp"

using namespace peerrev;
using Catch::Approx;

namespace {

std::vector<ScoreSample> samples(std::initializer_list<double> v) {
  std::vector<ScoreSample> out;
  ReviewerId id = 0;
  for (double x : v) out.push_back({x, id++});
  return out;
}

}  // namespace

TEST_CASE("MSD formulas on hand-computed cases") {
  const std::vector<double> s{0.1, 0.2};
  CHECK(msd_simple(s) == Approx(0.0125));
  CHECK(msd_bayes(s) == Approx(0.008));
  const std::vector<double> three{0.1, 0.1, 0.1};
  CHECK(msd_simple(three) == Approx(0.01 / 3.0));
  CHECK(msd_bayes(three) == Approx(0.01 / 3.0));
  CHECK(msd_bayes(std::vector<double>{0.3}) == Approx(0.09));
}

TEST_CASE("MSD rejects bad sigmas") {
  CHECK_THROWS_AS(msd_bayes(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(msd_bayes(std::vector<double>{0.1, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(msd_simple(std::vector<double>{-0.1}), InvalidArgument);
  CHECK_THROWS_AS(msd_simple(std::vector<double>{INFINITY}), InvalidArgument);
  CHECK_THROWS_AS(msd_simple(std::vector<double>{0.1, 0.2}, 3), InvalidArgument);
}

TEST_CASE("weights are normalized precisions") {
  const std::vector<double> s{0.1, 0.2, 0.4};
  const auto w = weights_from_sigmas(s);
  // precisions 100, 25, 6.25 -> total 131.25
  CHECK(w[0].weight == Approx(100.0 / 131.25));
  CHECK(w[1].weight == Approx(25.0 / 131.25));
  CHECK(w[2].weight == Approx(6.25 / 131.25));
  double sum = 0.0;
  for (const auto& x : w) sum += x.weight;
  CHECK(sum == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights are invariant to a common scale") {
  Rng rng = make_stream(5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> s(1 + uniform_index(rng, 8)), t;
    for (auto& x : s) x = 0.01 + uniform01(rng);
    for (double x : s) t.push_back(4.0 * x);
    const auto a = weights_from_sigmas(s), b = weights_from_sigmas(t);
    for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(a[i].weight == b[i].weight);
  }
}

TEST_CASE("simple mean and inverse-variance mean") {
  const auto sc = samples({0.2, 0.8});
  const auto m = simple_mean(sc);
  CHECK(m.mean == Approx(0.5));
  CHECK_FALSE(m.sigma_total.has_value());
  CHECK(m.n_reviews == 2);

  const std::vector<double> sig{0.1, 0.2};
  const auto b = inverse_variance_mean(sc, sig);
  CHECK(b.mean == Approx((100 * 0.2 + 25 * 0.8) / 125.0));
  CHECK(*b.sigma_total == Approx(std::sqrt(0.008)));

  const auto m2 = simple_mean(sc, std::span<const double>(sig));
  CHECK(*m2.sigma_total == Approx(std::sqrt(0.0125)));

  // Equal sigmas reduce to the plain mean.
  const std::vector<double> eq{0.3, 0.3};
  CHECK(inverse_variance_mean(sc, eq).mean == Approx(0.5));
}

TEST_CASE("estimators reject empty or mismatched input") {
  const std::vector<ScoreSample> none;
  CHECK_THROWS_AS(simple_mean(none), InsufficientData);
  CHECK_THROWS_AS(inverse_variance_mean(none, std::vector<double>{}), InsufficientData);
  CHECK_THROWS_AS(inverse_variance_mean(samples({0.1}), std::vector<double>{0.1, 0.2}), InvalidArgument);
  CHECK_THROWS_AS(simple_mean(samples({NAN})), InvalidArgument);
}

TEST_CASE("certainty gate is strict") {
  PaperEstimate e;
  e.sigma_total = 0.15;
  CHECK_FALSE(certainty_gate(e, CertaintyPolicy{0.15}).published);
  e.sigma_total = std::nextafter(0.15, 0.0);
  CHECK(certainty_gate(e, CertaintyPolicy{0.15}).published);
  e.sigma_total = 0.2;
  CHECK_FALSE(certainty_gate(e, CertaintyPolicy{0.15}).published);
  CHECK_THROWS_AS(certainty_gate(PaperEstimate{}, CertaintyPolicy{0.15}), InvalidArgument);
  CHECK_THROWS_AS(CertaintyPolicy{0.0}, InvalidArgument);
}

TEST_CASE("property: Bayes MSD never exceeds simple MSD and bounds the best reviewer") {
  Rng rng = make_stream(9);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t n = 1 + uniform_index(rng, 10);
    std::vector<double> s(n);
    for (auto& x : s) x = 0.01 + uniform01(rng);
    const double b = msd_bayes(s), m = msd_simple(s);
    REQUIRE(b <= m * (1 + 1e-12));
    double smin = s[0];
    for (double x : s) smin = std::min(smin, x);
    REQUIRE(b <= smin * smin * (1 + 1e-12));
  }
}

TEST_CASE("Monte Carlo spread of the weighted mean matches its analytic MSD") {
  Rng rng = make_stream(21);
  const std::vector<double> s{0.05, 0.2, 0.4};
  const int trials = 40000;
  double se_b = 0.0, se_m = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<ScoreSample> sc;
    for (std::size_t i = 0; i < s.size(); ++i) sc.push_back({0.5 + s[i] * standard_normal(rng), static_cast<ReviewerId>(i)});
    const double b = inverse_variance_mean(sc, s).mean - 0.5, m = simple_mean(sc).mean - 0.5;
    se_b += b * b;
    se_m += m * m;
  }
  CHECK(se_b / trials == Approx(msd_bayes(s)).epsilon(0.03));
  CHECK(se_m / trials == Approx(msd_simple(s)).epsilon(0.03));
}

TEST_CASE("worked examples") {
  CHECK(msd_simple(std::vector<double>{1.0, 2.0}) == Approx(1.25));
  CHECK(msd_bayes(std::vector<double>{1.0, 2.0}) == Approx(0.8));
  CHECK(msd_bayes(std::vector<double>{0.5, 1.0, 2.0}) == Approx(1.0 / 5.25));
  const auto b = inverse_variance_mean(samples({0.4, 0.8}), std::vector<double>{0.1, 0.2});
  CHECK(b.mean == Approx(0.48));
  CHECK(*b.sigma_total == Approx(std::sqrt(1.0 / 125.0)));
  const auto one = inverse_variance_mean(samples({0.7}), std::vector<double>{0.3});
  CHECK(one.mean == Approx(0.7));
  CHECK(*one.sigma_total == Approx(0.3));
}

TEST_CASE("Monte Carlo MSD of the plain mean with wide spreads") {
  Rng rng = make_stream(33);
  const std::vector<double> s{1, 1, 2, 2, 3};
  const int trials = 100000;
  double se = 0.0;
  for (int t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (double x : s) sum += x * standard_normal(rng);
    const double d = sum / 5.0;
    se += d * d;
  }
  CHECK(msd_simple(s) == Approx(0.76));
  CHECK(se / trials == Approx(0.76).epsilon(0.02));
}

TEST_CASE("property: adding a review strictly lowers the Bayes spread") {
  Rng rng = make_stream(34);
  for (int rep = 0; rep < 2000; ++rep) {
    std::vector<double> s(1 + uniform_index(rng, 8));
    for (auto& x : s) x = 0.01 + uniform01(rng);
    const double before = msd_bayes(s);
    s.push_back(0.01 + 10.0 * uniform01(rng));
    REQUIRE(msd_bayes(s) < before);
  }
}
