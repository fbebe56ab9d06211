#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rare/estimator.hpp"

namespace rare {

inline constexpr double kScoreFloor = 1e-12;

/// Nonnegative importance scores and their normalization q = s / sum(s).
struct ScoreVector {
  std::vector<double> scores;
  std::vector<double> q;

  std::size_t size() const noexcept { return q.size(); }
  /// Floors every score at kScoreFloor and normalizes.
  static ScoreVector from_scores(std::vector<double> scores);
};

/// s_i = max(p_i, 1e-12)^alpha.
ScoreVector importance_scores(const FailureField& field, double alpha);

struct TrialResult {
  double p_hat = 0.0;
  double recall = 0.0;
};

/// Level-0 failure indicator per point, possibly evaluated lazily.
using TruthFn = std::function<bool(std::size_t)>;

/// K i.i.d. draws from q; p_hat = mean of 1{fail} (1/N) / q. Recall is the
/// number of distinct failing points drawn over `total_failures`.
TrialResult is_rate_trial(const ScoreVector& scores, const TruthFn& truth,
                          std::size_t total_failures, std::size_t draws, std::uint64_t seed);

/// Convenience overload with a fully known indicator vector.
TrialResult is_rate_trial(const ScoreVector& scores, const std::vector<char>& truth,
                          std::size_t draws, std::uint64_t seed);

struct RateReport {
  double p_hat_mean = 0.0;
  double p_gamma = 0.0;      // rate used to normalize the variance
  double relative_variance = 0.0;
  double recall = 0.0;
  double se_p_hat = 0.0;
  double se_relative_variance = 0.0;
  double se_recall = 0.0;
  std::size_t trials = 0;
  std::size_t draws = 0;
};

/// Seed of trial k: splitmix64(root + k).
std::uint64_t trial_seed(std::uint64_t root, std::uint64_t k);

/// Repeated independent IS trials. With `p_gamma` unset (live mode) the
/// variance is normalized by the mean estimate instead.
RateReport repeated_is_trials(const ScoreVector& scores, const TruthFn& truth,
                              std::size_t total_failures, std::optional<double> p_gamma,
                              std::size_t draws, std::size_t trials, std::uint64_t seed);

RateReport repeated_is_trials(const ScoreVector& scores, const std::vector<char>& truth,
                              std::size_t draws, std::size_t trials, std::uint64_t seed);

/// Exact E[p_hat] of one draw, by enumeration over the pool.
double expected_rate_estimate(const ScoreVector& scores, const std::vector<char>& truth);

struct RecallPoint {
  double retention = 0.0;  // multiples of the failure count
  double recall = 0.0;
};

/// Recall among the top ceil(t * failures) points ranked by score
/// (descending, ties by index) for t = 0.5, 1.0, ..., 10.
std::vector<RecallPoint> retention_recall_curve(const std::vector<double>& ranking_scores,
                                                const std::vector<char>& truth);

/// Multilevel-splitting lower bounds with T = 1 MCMC simulations per level.
struct SplittingBound {
  long levels = 0;              // K = floor(log p / log(1 - delta))
  long particles = 0;           // N
  long min_simulations = 0;     // round(N + delta N K)
  double relative_variance = 0.0;
};

SplittingBound splitting_bound_for_rv(double p_gamma, double delta, double target_rv);
SplittingBound splitting_bound_for_budget(double p_gamma, double delta, double budget);

void write_retention_recall_csv(std::ostream& out, const std::vector<RecallPoint>& curve);
void write_rate_report_csv(std::ostream& out,
                           const std::vector<std::pair<std::string, RateReport>>& rows);

}  // namespace rare
