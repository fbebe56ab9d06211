#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rare/errors.hpp"
#include "rare/gp.hpp"
#include "rare/kernel.hpp"

TEST_SUITE("gp") {

TEST_CASE("Matern 5/2 kernel against the closed form") {
  std::mt19937_64 rng(1);
  auto pool = oracle::random_pool(10, 3, rng);
  auto h = oracle::random_hyper(3, 2, rng);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      auto xi = pool->point(i), xj = pool->point(j);
      double base = oracle::matern52(xi.data(), xj.data(), 3, h.lengthscales, h.signal_var);
      double disc = oracle::matern52(xi.data(), xj.data(), 3, h.discrepancy[0].lengthscales,
                                     h.discrepancy[0].signal_var);
      CHECK(rare::matern25_kernel(xi, xj, h) == doctest::Approx(base).epsilon(1e-14));
      CHECK(rare::latent_kernel({i, 0}, {j, 1}, *pool, h) == doctest::Approx(base).epsilon(1e-14));
      CHECK(rare::latent_kernel({i, 1}, {j, 1}, *pool, h) == doctest::Approx(base + disc).epsilon(1e-14));
    }
  }
  CHECK(rare::observation_noise(0, h) == 0.0);
  CHECK(rare::observation_noise(1, h) == h.discrepancy[0].noise_var);
  CHECK(rare::multifidelity_kernel({3, 1}, {3, 1}, *pool, h) ==
        doctest::Approx(h.signal_var + h.discrepancy[0].signal_var + h.discrepancy[0].noise_var + h.jitter));
  CHECK(rare::multifidelity_kernel({3, 0}, {3, 0}, *pool, h) == doctest::Approx(h.signal_var + h.jitter));
}

TEST_CASE("hyperparameter round trips") {
  std::mt19937_64 rng(2);
  auto h = oracle::random_hyper(2, 3, rng);
  CHECK(h.num_params() == 3 + 2 * 4);
  auto logs = h.to_log();
  rare::GpHyperparams g = rare::GpHyperparams::defaults(2, 3);
  g.assign_log(logs);
  CHECK(g.to_log() == logs);
  CHECK(std::log(h.lengthscales[1]) == doctest::Approx(logs[1]));
  CHECK(std::log(h.discrepancy[1].noise_var) == doctest::Approx(logs.back()));
  auto back = rare::hyperparams_from_text(rare::to_text(h));
  CHECK(back.to_log() == logs);
  CHECK(back.jitter == h.jitter);
  h.signal_var = -1.0;
  CHECK_THROWS_AS(h.validate(), rare::InvalidInput);
}

TEST_CASE("evaluation log") {
  rare::EvaluationLog log;
  log.add({1, 0}, 2.0, 1);
  log.add({1, 1}, 4.0, 1);
  CHECK(log.contains({1, 1}));
  CHECK_FALSE(log.contains({2, 0}));
  CHECK_THROWS_AS(log.add({1, 0}, 3.0, 2), rare::InvalidInput);
  CHECK_THROWS_AS(log.add({2, 0}, std::nan(""), 2), rare::InvalidInput);
  auto n = log.normalization();
  CHECK(n.mean == doctest::Approx(3.0));
  CHECK(n.std == doctest::Approx(1.0));
  rare::EvaluationLog flat;
  flat.add({0, 0}, 5.0, 1);
  flat.add({1, 0}, 5.0, 1);
  CHECK(flat.normalization().std == 1.0);
}

TEST_CASE("posterior matches a dense solve") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    auto p = fixture::random_problem(rng, 25, 2, 2, 12);
    auto state = rare::fit_posterior(p.pool, p.log, p.hyper, p.gamma);
    auto dense = oracle::dense_from_state(state, p.log);
    std::vector<rare::AugmentedInput> q;
    for (std::size_t i = 0; i < 25; i += 3) q.push_back({i, i % 2});
    auto mv = rare::posterior_mean_var(state, q);
    auto cov = rare::posterior_cross_cov(state, q, q);
    const double sc = dense.scale();
    for (std::size_t a = 0; a < q.size(); ++a) {
      CHECK(mv.mean(a) == doctest::Approx(dense.mean(q[a]) * sc + dense.mean_shift()).epsilon(1e-8));
      CHECK(std::abs(mv.var(a) - std::max(0.0, dense.cov(q[a], q[a])) * sc * sc) < 1e-8);
      for (std::size_t b = 0; b < q.size(); ++b)
        CHECK(std::abs(cov(a, b) - dense.cov(q[a], q[b]) * sc * sc) < 1e-8);
    }
    CHECK(state.gamma_normalized() == doctest::Approx(dense.gamma_normalized(p.gamma)));
  }
}

TEST_CASE("empty log gives the prior and observed level-0 points are interpolated") {
  std::mt19937_64 rng(4);
  auto p = fixture::random_problem(rng, 15, 2, 1, 6);
  auto prior = rare::fit_posterior(p.pool, rare::EvaluationLog{}, p.hyper, p.gamma);
  std::vector<rare::AugmentedInput> q{{0, 0}, {5, 0}};
  auto mv = rare::posterior_mean_var(prior, q);
  CHECK(mv.mean(0) == 0.0);
  CHECK(mv.var(1) == doctest::Approx(p.hyper.signal_var));

  auto state = rare::fit_posterior(p.pool, p.log, p.hyper, p.gamma);
  for (const auto& r : p.log.records()) {
    std::vector<rare::AugmentedInput> one{r.input};
    auto m = rare::posterior_mean_var(state, one);
    CHECK(m.mean(0) == doctest::Approx(r.value).epsilon(1e-4));
    CHECK(m.var(0) < 1e-4);
  }
}

TEST_CASE("marginal likelihood value and gradient") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 4; ++rep) {
    auto p = fixture::random_problem(rng, 20, 2, 2, 14);
    auto mll = rare::marginal_log_likelihood(*p.pool, p.log, p.hyper);
    std::vector<rare::AugmentedInput> x;
    std::vector<double> y;
    for (const auto& r : p.log.records()) {
      x.push_back(r.input);
      y.push_back(r.value);
    }
    oracle::DenseGp dense(*p.pool, p.hyper, x, y, p.hyper.jitter);
    CHECK(mll.value == doctest::Approx(dense.log_likelihood()).epsilon(1e-9));

    auto base = p.hyper.to_log();
    REQUIRE(mll.gradient.size() == base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      const double step = 1e-5;
      auto plus = base, minus = base;
      plus[k] += step;
      minus[k] -= step;
      rare::GpHyperparams hp = p.hyper, hm = p.hyper;
      hp.assign_log(plus);
      hm.assign_log(minus);
      double fd = (rare::marginal_log_likelihood(*p.pool, p.log, hp).value -
                   rare::marginal_log_likelihood(*p.pool, p.log, hm).value) / (2 * step);
      CAPTURE(k);
      CHECK(std::abs(mll.gradient[k] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-2));
    }
  }
  rare::EvaluationLog one;
  one.add({0, 0}, 1.0, 1);
  std::mt19937_64 r2(1);
  auto pool = oracle::random_pool(3, 2, r2);
  CHECK_THROWS_AS(rare::marginal_log_likelihood(*pool, one, rare::GpHyperparams::defaults(2, 1)),
                  rare::InvalidInput);
}

TEST_CASE("training raises the likelihood and respects the box") {
  std::mt19937_64 rng(8);
  auto p = fixture::random_problem(rng, 30, 2, 2, 20);
  auto init = rare::GpHyperparams::defaults(2, 2);
  rare::TrainOptions opts;
  opts.iterations = 60;
  auto trained = rare::train_hyperparameters(*p.pool, p.log, init, opts);
  CHECK(rare::marginal_log_likelihood(*p.pool, p.log, trained).value >
        rare::marginal_log_likelihood(*p.pool, p.log, init).value);
  for (double v : trained.to_log()) {
    CHECK(v >= opts.min_log);
    CHECK(v <= opts.max_log);
  }
  CHECK(trained.jitter == init.jitter);
  opts.iterations = 0;
  CHECK(rare::train_hyperparameters(*p.pool, p.log, init, opts).to_log() == init.to_log());
}

}
