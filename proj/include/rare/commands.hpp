#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rare/config.hpp"
#include "rare/evaluation.hpp"
#include "rare/pool.hpp"

namespace rare {

/// Pool loaded from CSV: columns x0..x{d-1} in any position, plus an optional
/// truth_f_level0 column with the level-0 values.
struct PoolData {
  std::shared_ptr<const EmbeddingPool> pool;
  std::optional<std::vector<double>> truth_f;
};

PoolData read_pool_csv(const std::string& path);

struct RunOutcome {
  std::string method;
  RateReport report;
  std::vector<RecallPoint> curve;  // empty when the failure set is unknown
};

/// Runs the configured method and writes its artifacts to `out_dir`.
/// Progress lines go to `progress`.
RunOutcome run_configured(const ExperimentConfig& config, const std::string& out_dir,
                          std::ostream& progress);

/// Text report of the multilevel-splitting bounds; exactly one of
/// `target_rv` and `budget` must be set.
std::string splitting_bound_report(double p_gamma, double delta, std::optional<double> target_rv,
                                   std::optional<double> budget);

/// Writes the synthetic pool CSV and, when `values_path` is nonempty, a
/// precomputed oracle file with every (point, level) value.
void generate_synthetic_files(const SyntheticSpec& spec, std::uint64_t noise_seed,
                              const std::string& pool_path, const std::string& values_path);

struct ScoreReportOptions {
  std::string scores_path;  // point_index,score or point_index,p_n,h_n
  std::string truth_path;   // pool CSV with truth_f_level0
  std::string out_dir;
  std::string method = "scores";
  double gamma = 0.56;
  double alpha = 2.5;  // applied to p_n columns only
  std::optional<std::size_t> draws;
  double draws_multiple = 5.0;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
};

RunOutcome score_report(const ScoreReportOptions& options);

}  // namespace rare
