#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rare/gp.hpp"

namespace fixture {

struct Problem {
  std::shared_ptr<rare::EmbeddingPool> pool;
  rare::GpHyperparams hyper;
  rare::EvaluationLog log;
  double gamma = 0.0;
};

/// Smooth test objective with a level-dependent bias.
inline double objective(const rare::EmbeddingPool& pool, const rare::AugmentedInput& in) {
  auto x = pool.point(in.point);
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) v += std::sin(1.3 * x[j] + 0.4 * static_cast<double>(j)) + 0.3 * x[j] * x[j];
  return v + 0.2 * static_cast<double>(in.level);
}

/// Random pool, hyperparameters and `observations` distinct logged inputs.
inline Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t d, std::size_t levels,
                              std::size_t observations) {
  Problem p;
  p.pool = oracle::random_pool(n, d, rng);
  p.hyper = oracle::random_hyper(d, levels, rng);
  std::vector<rare::AugmentedInput> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < levels; ++l) all.push_back({i, l});
  std::shuffle(all.begin(), all.end(), rng);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t k = 0; k < std::min(observations, all.size()); ++k) {
    const auto& in = all[k];
    p.log.add(in, objective(*p.pool, in) + (in.level > 0 ? noise(rng) : 0.0), 1);
  }
  std::vector<double> f;
  for (std::size_t i = 0; i < n; ++i) f.push_back(objective(*p.pool, {i, 0}));
  std::sort(f.begin(), f.end());
  p.gamma = f[f.size() / 4];
  return p;
}

}  // namespace fixture
