#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rare/evaluation.hpp"
#include "rare/gp.hpp"
#include "rare/oracle.hpp"

namespace rare {

/// Uniform random distinct augmented inputs not in `exclude`, until the
/// accumulated cost reaches the budget or the inputs run out. With
/// `levels == 1` only level 0 is used.
std::vector<AugmentedInput> random_acquisition(const EmbeddingPool& pool,
                                               const FidelityConfig& fidelity,
                                               const EvaluationLog& exclude, double budget,
                                               std::uint64_t seed);

struct McScores {
  ScoreVector scores;                // uniform
  std::vector<std::size_t> order;    // random permutation used as the ranking
  std::vector<double> ranking;       // N - position, for retention-recall
};

McScores mc_scores(std::size_t n, std::uint64_t seed);

struct CeState {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // diagonal covariance
  std::size_t elites = 5;
};

struct CeConfig {
  int batches = 3;
  std::size_t initial = 20;
  std::size_t per_batch = 15;
  std::size_t elites = 5;
};

struct CeResult {
  CeState state;
  ScoreVector scores;
  EvaluationLog log;
  std::vector<std::vector<std::size_t>> batch_points;
};

/// Refit mean and diagonal variance to the lowest-f `elites` among the
/// given evaluations; variances are floored at 1e-6 of the pool variance.
CeState fit_elites(const EmbeddingPool& pool, const std::vector<std::pair<std::size_t, double>>& evals,
                   std::size_t elites);

/// Cross-entropy search with Gaussian draws snapped to the nearest
/// unevaluated pool point; final scores are the Gaussian density.
CeResult run_cross_entropy(const EmbeddingPool& pool, Oracle& oracle, const CeConfig& config,
                           std::uint64_t seed);

ScoreVector gaussian_pdf_scores(const CeState& state, const EmbeddingPool& pool);

/// Externally supplied scores from a CSV `point_index,score` (one row per point).
std::vector<double> read_external_scores(const std::string& path, std::size_t n);

}  // namespace rare
