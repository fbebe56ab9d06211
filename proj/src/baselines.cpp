#include "rare/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "rare/acquisition.hpp"
#include "rare/driver.hpp"
#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {

std::vector<AugmentedInput> random_acquisition(const EmbeddingPool& pool,
                                               const FidelityConfig& fidelity,
                                               const EvaluationLog& exclude, double budget,
                                               std::uint64_t seed) {
  if (!(budget > 0.0)) throw InvalidInput("acquisition budget must be positive");
  std::vector<AugmentedInput> universe;
  universe.reserve(pool.size() * fidelity.levels());
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t l = 0; l < fidelity.levels(); ++l)
      if (!exclude.contains({i, l})) universe.push_back({i, l});
  std::mt19937_64 rng(seed);
  std::shuffle(universe.begin(), universe.end(), rng);
  std::vector<AugmentedInput> picked;
  double spent = 0.0;
  for (const auto& in : universe) {
    if (spent + kCostEpsilon >= budget) break;
    picked.push_back(in);
    spent += fidelity.cost(in.level);
  }
  return picked;
}

McScores mc_scores(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidInput("MC scores need a nonempty pool");
  McScores out;
  out.scores = ScoreVector::from_scores(std::vector<double>(n, 1.0));
  out.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(out.order.begin(), out.order.end(), rng);
  out.ranking.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.ranking[out.order[k]] = static_cast<double>(n - k);
  return out;
}

CeState fit_elites(const EmbeddingPool& pool, const std::vector<std::pair<std::size_t, double>>& evals,
                   std::size_t elites) {
  if (evals.empty() || elites == 0) throw InvalidInput("elite fit needs evaluations");
  auto sorted = evals;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  const std::size_t k = std::min(elites, sorted.size());
  const std::size_t d = pool.dim();
  CeState s;
  s.elites = elites;
  s.mean = Eigen::VectorXd::Zero(d);
  s.var = Eigen::VectorXd::Zero(d);
  for (std::size_t e = 0; e < k; ++e)
    for (std::size_t j = 0; j < d; ++j) s.mean(j) += pool.point(sorted[e].first)[j];
  s.mean /= static_cast<double>(k);
  for (std::size_t e = 0; e < k; ++e)
    for (std::size_t j = 0; j < d; ++j) {
      double dx = pool.point(sorted[e].first)[j] - s.mean(j);
      s.var(j) += dx * dx;
    }
  s.var /= static_cast<double>(k);
  const auto pool_var = pool.variances();
  for (std::size_t j = 0; j < d; ++j)
    s.var(j) = std::max(s.var(j), std::max(1e-6 * pool_var[j], std::numeric_limits<double>::min()));
  return s;
}

namespace {

std::size_t nearest_unused(const EmbeddingPool& pool, const Eigen::VectorXd& x,
                           const std::vector<char>& used) {
  std::size_t best = pool.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (used[i]) continue;
    auto p = pool.point(i);
    double d = 0.0;
    for (std::size_t j = 0; j < pool.dim(); ++j) d += (p[j] - x(j)) * (p[j] - x(j));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

CeResult run_cross_entropy(const EmbeddingPool& pool, Oracle& oracle, const CeConfig& config,
                           std::uint64_t seed) {
  if (config.batches < 1 || config.initial == 0) throw InvalidInput("CE needs at least one batch");
  CeResult result;
  std::vector<char> used(pool.size(), 0);
  std::mt19937_64 rng(seed);

  auto evaluate = [&](std::size_t i, int batch) {
    double f = evaluate_input(oracle, {i, 0});
    result.log.add({i, 0}, f, batch);
    used[i] = 1;
    return f;
  };

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<std::size_t, double>> evals;
  std::vector<std::size_t> batch_points;
  for (std::size_t k = 0; k < std::min(config.initial, pool.size()); ++k) {
    evals.emplace_back(order[k], evaluate(order[k], 1));
    batch_points.push_back(order[k]);
  }
  result.batch_points.push_back(batch_points);
  result.state = fit_elites(pool, evals, config.elites);

  std::normal_distribution<double> normal;
  for (int b = 2; b <= config.batches; ++b) {
    evals.clear();
    batch_points.clear();
    for (std::size_t k = 0; k < config.per_batch; ++k) {
      Eigen::VectorXd x(pool.dim());
      for (std::size_t j = 0; j < pool.dim(); ++j)
        x(j) = result.state.mean(j) + std::sqrt(result.state.var(j)) * normal(rng);
      std::size_t i = nearest_unused(pool, x, used);
      if (i == pool.size()) break;
      evals.emplace_back(i, evaluate(i, b));
      batch_points.push_back(i);
    }
    result.batch_points.push_back(batch_points);
    if (!evals.empty()) result.state = fit_elites(pool, evals, config.elites);
  }
  result.scores = gaussian_pdf_scores(result.state, pool);
  return result;
}

ScoreVector gaussian_pdf_scores(const CeState& state, const EmbeddingPool& pool) {
  if (static_cast<std::size_t>(state.mean.size()) != pool.dim() || state.var.size() != state.mean.size())
    throw InvalidInput("CE state dimension differs from pool");
  std::vector<double> density(pool.size());
  double log_norm = 0.0;
  for (Eigen::Index j = 0; j < state.var.size(); ++j) {
    if (!(state.var(j) > 0.0)) throw InvalidInput("CE variances must be positive");
    log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * state.var(j));
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto p = pool.point(i);
    double q = 0.0;
    for (std::size_t j = 0; j < pool.dim(); ++j) q += (p[j] - state.mean(j)) * (p[j] - state.mean(j)) / state.var(j);
    density[i] = std::exp(log_norm - 0.5 * q);
  }
  return ScoreVector::from_scores(std::move(density));
}

std::vector<double> read_external_scores(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open score file " + path);
  std::vector<double> scores(n, std::numeric_limits<double>::quiet_NaN());
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      if (trim(line) != "point_index,score") throw ConfigError(lineno, path + ": expected header point_index,score");
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 2) throw ConfigError(lineno, path + ": expected 2 fields");
    try {
      long i = parse_long(fields[0]);
      double s = parse_double(fields[1]);
      if (i < 0 || static_cast<std::size_t>(i) >= n) throw InvalidInput("point index outside the pool");
      if (!std::isnan(scores[i])) throw InvalidInput("duplicate point index");
      scores[i] = s;
    } catch (const InvalidInput& e) {
      throw ConfigError(lineno, path + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (std::isnan(scores[i])) throw ConfigError(0, path + ": no score for point " + std::to_string(i));
  return scores;
}

}  // namespace rare
