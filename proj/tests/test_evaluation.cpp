#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rare/errors.hpp"
#include "rare/evaluation.hpp"

namespace {

std::vector<char> random_truth(std::size_t n, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution b(rate);
  std::vector<char> t(n);
  for (auto& v : t) v = b(rng) ? 1 : 0;
  t[0] = 1;
  return t;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("score floors and normalization") {
  auto s = rare::ScoreVector::from_scores({0.0, 1.0, 3.0});
  CHECK(s.scores[0] == rare::kScoreFloor);
  double total = 0.0;
  for (double q : s.q) total += q;
  CHECK(total == doctest::Approx(1.0));
  CHECK(s.q[2] == doctest::Approx(3.0 * s.q[1]));
  rare::FailureField f{{0.5, 0.0, 1.0}, {0.25, 0.0, 0.0}};
  auto is = rare::importance_scores(f, 2.0);
  CHECK(is.scores[0] == doctest::Approx(0.25));
  CHECK(is.scores[1] == doctest::Approx(1e-24));
  CHECK(is.scores[2] == doctest::Approx(1.0));
  CHECK(is.q[1] > 0.0);
}

TEST_CASE("the estimator is unbiased for any positive scores") {
  std::mt19937_64 rng(71);
  const std::size_t n = 200;
  auto truth = random_truth(n, 0.1, rng);
  std::size_t failures = 0;
  for (char c : truth) failures += c;
  const double p = static_cast<double>(failures) / n;
  std::lognormal_distribution<double> ln(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> raw(n);
    for (auto& v : raw) v = ln(rng);
    auto s = rare::ScoreVector::from_scores(raw);
    // Direct enumeration: sum_i q_i * 1{fail_i} / (N q_i).
    double enumerated = 0.0;
    for (std::size_t i = 0; i < n; ++i) enumerated += s.q[i] * (truth[i] ? 1.0 / (n * s.q[i]) : 0.0);
    CHECK(std::abs(enumerated - p) < 1e-12);
    CHECK(std::abs(rare::expected_rate_estimate(s, truth) - p) < 1e-12);
  }
  std::vector<double> raw(n);
  for (auto& v : raw) v = ln(rng);
  auto s = rare::ScoreVector::from_scores(raw);
  auto r = rare::repeated_is_trials(s, truth, 50, 10000, 5);
  CHECK(std::abs(r.p_hat_mean - p) < 3.0 * r.se_p_hat);
  CHECK(r.p_gamma == p);
}

TEST_CASE("single trial bookkeeping") {
  std::vector<char> truth{1, 0, 0, 1};
  auto s = rare::ScoreVector::from_scores({1.0, 1.0, 1.0, 1.0});
  auto t = rare::is_rate_trial(s, truth, 1000, 3);
  CHECK(t.recall == 1.0);
  CHECK(t.p_hat == doctest::Approx(0.5).epsilon(0.1));
  auto only = rare::ScoreVector::from_scores({1.0, 0.0, 0.0, 0.0});
  auto u = rare::is_rate_trial(only, truth, 10, 3);
  CHECK(u.recall == 0.5);
  CHECK(u.p_hat == doctest::Approx(0.25));
  CHECK_THROWS_AS(rare::is_rate_trial(s, std::vector<char>{1, 0}, 10, 3), rare::InvalidInput);
}

TEST_CASE("mean recall matches the inclusion probability") {
  std::mt19937_64 rng(72);
  const std::size_t n = 5000;
  auto truth = random_truth(n, 0.01, rng);
  std::size_t failures = 0;
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    failures += truth[i];
    raw[i] = truth[i] ? 1.0 : 0.0;
  }
  auto s = rare::ScoreVector::from_scores(raw);
  const std::size_t draws = 5 * failures;
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (truth[i]) expected += (1.0 - std::pow(1.0 - s.q[i], static_cast<double>(draws))) / failures;
  const int trials = 2000;
  double mean = 0.0, sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    double r = rare::is_rate_trial(s, truth, draws, rare::trial_seed(9, k)).recall;
    mean += r / trials;
    sq += r * r / trials;
  }
  const double se = std::sqrt(std::max(sq - mean * mean, 0.0) / trials);
  CHECK(expected > 0.99);
  CHECK(std::abs(mean - expected) < 4.0 * se);
}

TEST_CASE("trial seeds and determinism") {
  CHECK(rare::trial_seed(3, 4) == rare::trial_seed(4, 3));
  CHECK(rare::trial_seed(3, 4) != rare::trial_seed(3, 5));
  std::vector<char> truth{1, 0, 0, 1, 0, 0};
  auto s = rare::ScoreVector::from_scores({2, 1, 1, 3, 1, 1});
  auto a = rare::repeated_is_trials(s, truth, 4, 50, 11);
  auto b = rare::repeated_is_trials(s, truth, 4, 50, 11);
  CHECK(a.p_hat_mean == b.p_hat_mean);
  CHECK(a.relative_variance == b.relative_variance);
  auto live = rare::repeated_is_trials(s, [&](std::size_t i) { return truth[i] != 0; }, 0, std::nullopt, 4, 50, 11);
  CHECK(live.p_hat_mean == a.p_hat_mean);
  CHECK(live.p_gamma == live.p_hat_mean);
}

TEST_CASE("retention-recall curve") {
  std::vector<char> truth{0, 1, 0, 1, 0, 0, 0, 0};
  std::vector<double> rank{0.9, 0.8, 0.7, 0.1, 0.5, 0.4, 0.3, 0.2};
  auto c = rare::retention_recall_curve(rank, truth);
  REQUIRE(c.size() == 20);
  CHECK(c[0].retention == 0.5);
  CHECK(c[0].recall == 0.0);  // top 1
  CHECK(c[1].recall == 0.5);  // top 2
  CHECK(c[3].recall == 0.5);  // top 4
  CHECK(c[7].recall == 1.0);  // top 8
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k].recall >= c[k - 1].recall);
  CHECK_THROWS_AS(rare::retention_recall_curve(rank, std::vector<char>(8, 0)), rare::InvalidInput);
}

TEST_CASE("multilevel splitting bounds") {
  auto a = rare::splitting_bound_for_rv(0.01, 0.1, 0.00851);
  CHECK(a.levels == 43);
  CHECK(a.particles == 561);
  CHECK(a.min_simulations == 2973);
  auto b = rare::splitting_bound_for_rv(0.01, 0.1, 0.00969);
  CHECK(b.particles == 493);
  CHECK(b.min_simulations == 2613);
  auto c = rare::splitting_bound_for_budget(0.01, 0.1, 2296);
  CHECK(std::round(100.0 * 100.0 * c.relative_variance) / 100.0 == 1.10);
  auto d = rare::splitting_bound_for_rv(0.01, 0.1, 1.0);
  CHECK(d.particles == static_cast<long>(std::floor(43 * 0.1 / 0.9)));
  CHECK(d.min_simulations == std::lround(d.particles + 0.1 * d.particles * 43));
  CHECK_THROWS_AS(rare::splitting_bound_for_rv(0.0, 0.1, 0.1), rare::InvalidInput);
  CHECK_THROWS_AS(rare::splitting_bound_for_rv(0.01, 1.5, 0.1), rare::InvalidInput);
}

TEST_CASE("report writers") {
  std::ostringstream r;
  rare::write_retention_recall_csv(r, {{0.5, 0.25}, {1.0, 0.5}});
  CHECK(r.str() == "retention_multiple,recall\n0.5,0.25\n1,0.5\n");
  rare::RateReport rep;
  rep.p_hat_mean = 0.005;
  rep.relative_variance = 0.02;
  rep.recall = 1;
  std::ostringstream s;
  rare::write_rate_report_csv(s, {{"bams", rep}});
  CHECK(s.str() == "method,p_hat_mean,rv,recall,se_rv,se_recall\nbams,0.005,0.02,1,0,0\n");
}

}
