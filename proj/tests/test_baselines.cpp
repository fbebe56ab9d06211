#include <cmath>
#include <random>
#include <cstdio>
#include <fstream>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "rare/baselines.hpp"
#include "rare/errors.hpp"

TEST_SUITE("baselines") {

TEST_CASE("random acquisition at unit cost") {
  std::mt19937_64 rng(81);
  auto pool = oracle::random_pool(100, 2, rng);
  auto picks = rare::random_acquisition(*pool, rare::FidelityConfig::single(), {}, 15.0, 4);
  CHECK(picks.size() == 15);
  std::set<rare::AugmentedInput> seen(picks.begin(), picks.end());
  CHECK(seen.size() == 15);
  for (const auto& p : picks) CHECK(p.level == 0);
  auto again = rare::random_acquisition(*pool, rare::FidelityConfig::single(), {}, 15.0, 4);
  CHECK(again == picks);
  rare::EvaluationLog log;
  for (const auto& p : picks) log.add(p, 0.0, 1);
  auto more = rare::random_acquisition(*pool, rare::FidelityConfig::single(), log, 200.0, 5);
  CHECK(more.size() == 85);
  for (const auto& p : more) CHECK_FALSE(log.contains(p));
}

TEST_CASE("random acquisition multifidelity cost") {
  std::mt19937_64 rng(82);
  auto pool = oracle::random_pool(100, 2, rng);
  rare::FidelityConfig f;
  f.costs = {1.0, 0.1};
  auto picks = rare::random_acquisition(*pool, f, {}, 10.0, 6);
  double spent = 0.0;
  for (const auto& p : picks) spent += f.cost(p.level);
  CHECK(spent >= 10.0 - 1e-9);
  CHECK(spent - f.cost(picks.back().level) < 10.0 - 1e-9);
  std::set<std::size_t> levels;
  for (const auto& p : picks) levels.insert(p.level);
  CHECK(levels.size() == 2);
}

TEST_CASE("MC scores are uniform with a random ranking") {
  auto mc = rare::mc_scores(50, 3);
  for (double q : mc.scores.q) CHECK(q == doctest::Approx(1.0 / 50));
  std::set<std::size_t> perm(mc.order.begin(), mc.order.end());
  CHECK(perm.size() == 50);
  CHECK(*perm.rbegin() == 49);
  for (std::size_t k = 0; k < 50; ++k) CHECK(mc.ranking[mc.order[k]] == 50.0 - k);
}

TEST_CASE("retention-recall under MC ranking follows the random expectation") {
  const std::size_t n = 400;
  std::vector<char> truth(n, 0);
  for (std::size_t i = 0; i < n; i += 20) truth[i] = 1;  // 20 failures
  std::vector<double> mean(20, 0.0);
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    auto mc = rare::mc_scores(n, 1000 + r);
    auto curve = rare::retention_recall_curve(mc.ranking, truth);
    for (std::size_t k = 0; k < 20; ++k) mean[k] += curve[k].recall / reps;
  }
  for (std::size_t k = 0; k < 20; ++k) {
    // Top ceil(t F) of a random permutation holds a hypergeometric share.
    double top = std::ceil(0.5 * (k + 1) * 20);
    double expect = top / n;
    double sd = std::sqrt(expect * (1 - expect) / 20.0 / reps);
    CHECK(std::abs(mean[k] - expect) < 4.0 * sd);
  }
}

TEST_CASE("elite fit") {
  rare::PointMatrix m(4, 2);
  m << 0, 0, 1, 1, 2, 2, 3, 3;
  rare::EmbeddingPool pool(m);
  auto s = rare::fit_elites(pool, {{2, 0.0}, {2, 0.0}}, 5);
  CHECK(s.mean(0) == 2.0);
  auto var = pool.variances();
  CHECK(s.var(0) == doctest::Approx(1e-6 * var[0]));
  auto t = rare::fit_elites(pool, {{0, 5.0}, {1, 1.0}, {3, 2.0}}, 2);
  CHECK(t.mean(0) == doctest::Approx(2.0));
  CHECK(t.var(1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rare::fit_elites(pool, {}, 5), rare::InvalidInput);
}

TEST_CASE("Gaussian density scores") {
  rare::PointMatrix m(5, 2);
  m << 0, 0, 1, 0, 0, 2, -1, -1, 3, 1;
  rare::EmbeddingPool pool(m);
  rare::CeState s;
  s.mean = Eigen::Vector2d(0.0, 0.0);
  s.var = Eigen::Vector2d(1.0, 4.0);
  auto sc = rare::gaussian_pdf_scores(s, pool);
  for (int i = 0; i < 5; ++i) {
    double x = m(i, 0), y = m(i, 1);
    double direct = std::exp(-0.5 * (x * x + y * y / 4.0)) / (2.0 * M_PI * 2.0);
    CHECK(sc.scores[i] == doctest::Approx(direct).epsilon(1e-13));
  }
  for (int i = 1; i < 5; ++i) CHECK(sc.scores[0] > sc.scores[i]);
}

TEST_CASE("cross-entropy moves toward a low-f blob and never repeats a point") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g;
  rare::PointMatrix m(400, 2);
  for (int i = 0; i < 400; ++i) {
    m(i, 0) = 3.0 * g(rng);
    m(i, 1) = 3.0 * g(rng);
  }
  for (int i = 0; i < 40; ++i) {
    m(i, 0) = 6.0 + 0.3 * g(rng);
    m(i, 1) = 6.0 + 0.3 * g(rng);
  }
  auto pool = std::make_shared<rare::EmbeddingPool>(m);
  rare::FunctionOracle f([&](const rare::AugmentedInput& in) {
    auto x = pool->point(in.point);
    return std::hypot(x[0] - 6.0, x[1] - 6.0);
  });
  rare::CeConfig c;
  c.batches = 4;
  c.initial = 30;
  c.per_batch = 15;
  auto r = rare::run_cross_entropy(*pool, f, c, 2);
  REQUIRE(r.batch_points.size() == 4);
  std::set<std::size_t> seen;
  for (const auto& rec : r.log.records()) CHECK(seen.insert(rec.input.point).second);
  auto first = rare::fit_elites(*pool, [&] {
    std::vector<std::pair<std::size_t, double>> e;
    for (auto i : r.batch_points[0]) e.emplace_back(i, f.evaluate({i, 0}));
    return e;
  }(), 5);
  auto dist = [](const Eigen::VectorXd& mu) { return std::hypot(mu(0) - 6.0, mu(1) - 6.0); };
  CHECK(dist(r.state.mean) < dist(first.mean));
  double mean1 = 0.0, mean_last = 0.0;
  for (auto i : r.batch_points[0]) mean1 += f.evaluate({i, 0}) / r.batch_points[0].size();
  for (auto i : r.batch_points[3]) mean_last += f.evaluate({i, 0}) / r.batch_points[3].size();
  CHECK(mean_last < mean1);
}

TEST_CASE("external scores file") {
  const std::string path = "ext_scores_test.csv";
  {
    std::ofstream out(path);
    out << "point_index,score\n1,0.5\n0,2\n";
  }
  auto s = rare::read_external_scores(path, 2);
  CHECK(s == std::vector<double>{2.0, 0.5});
  CHECK_THROWS_AS(rare::read_external_scores(path, 3), rare::ConfigError);
  {
    std::ofstream out(path);
    out << "point_index,score\n0,abc\n";
  }
  try {
    rare::read_external_scores(path, 1);
    FAIL("expected a config error");
  } catch (const rare::ConfigError& e) {
    CHECK(e.line() == 2);
  }
  std::remove(path.c_str());
}

}
