#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rare/acquisition.hpp"
#include "rare/clustering.hpp"
#include "rare/estimator.hpp"
#include "rare/gp.hpp"
#include "rare/oracle.hpp"

namespace rare {

enum class AcquisitionKind {
  kVarianceBound,  // greedy acquisition over clusters
  kRandom,         // uniform random augmented inputs
};

struct RunConfig {
  double initial_budget = 20.0;  // m1, cost units
  double batch_budget = 15.0;    // m_b, cost units
  int batches = 3;               // including the initial random batch
  std::size_t clusters = 6;
  std::size_t clusters_initial = 0;  // 0 means 2 * clusters
  double eta = 1.0;
  double gamma = 0.0;
  FidelityConfig fidelity;
  TrainOptions train;
  SelectorOptions selector;
  AcquisitionKind acquisition = AcquisitionKind::kVarianceBound;
  /// Compare queue heads by dJ / cost (true) or by raw dJ in the global merge.
  bool merge_cost_normalized = true;
  /// Accept a pick only if the batch cost stays strictly below the budget.
  bool strict_budget = true;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t effective_initial_clusters() const {
    return clusters_initial == 0 ? 2 * clusters : clusters_initial;
  }
};

/// Derived seeds; all streams come from the root seed.
std::uint64_t initial_batch_seed(std::uint64_t root);
std::uint64_t batch_seed(std::uint64_t root, int batch);

struct BatchRecord {
  int batch = 0;
  std::vector<Selection> selected;  // dJ is NaN for random picks
  GpHyperparams hyper;              // trained after this batch
  FailureField field;               // p_n and h_n over the pool after this batch
  double mean_f = 0.0;              // mean observed value of this batch's picks
};

struct ExperimentResult {
  EvaluationLog log;
  std::vector<BatchRecord> batches;
  std::optional<PosteriorState> final_state;
};

/// Per-cluster greedy queues and the merged batch, before evaluation.
struct BatchPlan {
  ClusterAssignment clusters;
  std::vector<std::vector<Selection>> queues;
  std::vector<Selection> selected;  // dJ rescaled to the whole pool
};

/// Calls the oracle, naming the input in any error it reports.
double evaluate_input(Oracle& oracle, const AugmentedInput& input);

/// Uniformly random distinct augmented inputs across all levels until the
/// accumulated cost reaches the initial budget; each is evaluated.
EvaluationLog run_initial_batch(const EmbeddingPool& pool, const RunConfig& config, Oracle& oracle);

/// Per-cluster budget ceil(eta * m_b * N_s / N).
double cluster_budget(const RunConfig& config, std::size_t cluster_size, std::size_t pool_size);

/// Global merge over per-cluster queues: repeatedly take the best feasible
/// queue head until nothing fits. Queue dJ values must already be on the
/// whole-pool scale.
std::vector<Selection> merge_queues(const std::vector<std::vector<Selection>>& queues,
                                    double budget, bool cost_normalized, bool strict_budget);

BatchPlan plan_bams_batch(const PosteriorState& state, const EvaluationLog& log,
                          const RunConfig& config, int batch);

/// Plan, evaluate and log one acquisition batch; returns the picks.
std::vector<Selection> run_bams_batch(const PosteriorState& state, EvaluationLog& log,
                                      const RunConfig& config, Oracle& oracle, int batch);

/// Initial batch, then train/refit and acquire for each later batch.
ExperimentResult run_experiment(std::shared_ptr<const EmbeddingPool> pool, const RunConfig& config,
                                Oracle& oracle);

/// log.csv, scores_batch<k>.csv, selected_batch<k>.csv, hyperparams_batch<k>.txt.
void write_experiment(const std::string& dir, const ExperimentResult& result);

}  // namespace rare
