#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rare/gp.hpp"

namespace rare {

struct Candidate {
  AugmentedInput input;
  double cost = 1.0;
};

struct Selection {
  AugmentedInput input;
  double delta_j = 0.0;  // J(pending + y) - J(pending), averaged over the targets
  double cost = 1.0;
};

/// Inputs whose future observations we condition on, with the Cholesky
/// factor of cov_n(X_m, X_m) + observation noise. Conditioning covariances
/// are in the normalized scale of the posterior.
class PendingSet {
 public:
  PendingSet() = default;
  /// Throws InvalidInput on repeated inputs and NumericalFailure if the
  /// pending covariance is singular.
  PendingSet(const PosteriorState& state, std::vector<AugmentedInput> inputs);

  const std::vector<AugmentedInput>& inputs() const noexcept { return inputs_; }
  bool empty() const noexcept { return inputs_.empty(); }
  const Eigen::MatrixXd& cholesky() const noexcept { return chol_; }

 private:
  std::vector<AugmentedInput> inputs_;
  Eigen::MatrixXd chol_;
};

/// Expected point variance at x after observing the pending set,
/// Phi2(s, -s, t - 1) with s = (gamma - mu_n)/sigma_n and
/// t = 1 - cov_n(x, X_m) cov_n(X_m, X_m)^{-1} cov_n(X_m, x) / sigma_n^2.
double forward_point_variance(const PosteriorState& state, const AugmentedInput& x,
                              const PendingSet& pending);

/// Mean forward point variance over the targets.
double acquisition_j(const PosteriorState& state, const PendingSet& pending,
                     std::span<const AugmentedInput> targets);

struct SelectorOptions {
  /// Target/pair contributions provably below this bound are skipped.
  double prune_tolerance = 1e-13;
  /// Candidates whose conditional variance given the pending set falls below
  /// this are considered determined and never chosen.
  double determined_floor = 1e-12;
};

/// Greedy cost-normalized minimizer of the acquisition over one cluster.
/// Keeps the projected covariance state cov_n(t, X_q) cov_n(X_q, X_q)^{-1}
/// cov_n(X_q, c) up to date with rank-one updates, so adding a point costs
/// O(|targets| * |candidates|) instead of refactorizing.
class GreedySelector {
 public:
  GreedySelector(const PosteriorState& state, std::vector<AugmentedInput> targets,
                 std::vector<Candidate> candidates, SelectorOptions opts = {});

  /// Pick the candidate minimizing min(dJ, 0) / cost (ties: lowest point
  /// index, then level) and condition on it. Returns nullopt when no viable
  /// candidate is left.
  std::optional<Selection> select_next();

  /// Condition on a specific candidate without scoring the others.
  Selection add(std::size_t candidate_index);

  /// dJ for every candidate under the current pending set (NaN for those
  /// already chosen or determined).
  std::vector<double> delta_j_all() const;

  /// J over the targets for the current pending set.
  double current_j() const;

  /// Projected covariance M[t][c] = cov_n(t, X_q) cov_n(X_q, X_q)^{-1} cov_n(X_q, c).
  double projected(std::size_t target, std::size_t candidate) const;

  /// Current t-hat of a target.
  double residual_fraction(std::size_t target) const { return tau_[target]; }

  std::size_t num_targets() const noexcept { return targets_.size(); }
  std::size_t num_candidates() const noexcept { return candidates_.size(); }
  std::size_t num_active_targets() const noexcept { return active_.size(); }
  /// Exact dJ evaluations performed by select_next so far.
  std::size_t exact_evaluations() const noexcept { return exact_evaluations_; }
  const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
  const std::vector<AugmentedInput>& pending() const noexcept { return pending_; }
  std::optional<std::size_t> find_candidate(const AugmentedInput& input) const;

 private:
  double delta_j(std::size_t c) const;
  /// Upper bound on |dJ(c)| that needs no transcendental evaluations.
  double delta_j_bound(std::size_t c) const;
  void refresh_target(std::size_t t);

  const PosteriorState* state_;
  SelectorOptions opts_;
  std::vector<AugmentedInput> targets_;
  std::vector<Candidate> candidates_;
  std::vector<AugmentedInput> pending_;

  // Per target (all targets).
  std::vector<double> s_;         // standardized margin
  std::vector<double> var_;       // sigma_n^2, normalized scale
  std::vector<double> tau_;       // t-hat
  std::vector<double> phi_;       // variance_angle(t-hat)
  std::vector<double> bound_;     // exp(-s^2/2)/(2 pi): sup of the angular integrand
  Eigen::MatrixXd targ_proj_;     // L_n^{-1} k(X_n, t), n x T
  std::vector<double> sqrt_tau_;  // sqrt(t-hat)
  std::vector<double> ub_weight_; // 2 bound / (sqrt(2 - t-hat) |T|)
  std::vector<std::size_t> active_;   // targets that can still change J
  std::vector<std::ptrdiff_t> active_slot_;  // target -> column in residual_, or -1

  // Per candidate.
  Eigen::MatrixXd cand_proj_;     // L_n^{-1} k(X_n, c), n x C
  std::vector<double> h_;         // cov_n(c, c) + noise - Q_q(c, c)
  std::vector<char> chosen_;
  std::vector<std::vector<double>> cand_w_;  // rows of L_q^{-1} cov_n(X_q, c)
  std::vector<std::vector<double>> targ_w_;  // rows of L_q^{-1} cov_n(X_q, t), all targets

  std::size_t exact_evaluations_ = 0;

  // residual_(c, slot) = cov_n(c, t) - M[t][c] for active targets.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> residual_;
};

/// One greedy step from an existing pending set. Throws EmptySelection when
/// the candidate list is empty or every candidate is already determined.
Selection select_next(const PosteriorState& state, const std::vector<AugmentedInput>& pending,
                      const std::vector<Candidate>& candidates,
                      const std::vector<AugmentedInput>& targets, SelectorOptions opts = {});

/// Greedy selection until the accumulated cost reaches the budget or the
/// candidates run out. Returns the picks in selection order.
std::vector<Selection> select_batch(const PosteriorState& state,
                                    const std::vector<Candidate>& candidates,
                                    const std::vector<AugmentedInput>& targets, double budget,
                                    SelectorOptions opts = {});

/// Residual fractions below this are indistinguishable from round-off and
/// treated as zero.
inline constexpr double kTauSnap = 64.0 * 2.220446049250313e-16;

/// Tolerance used for every budget comparison on accumulated float costs.
inline constexpr double kCostEpsilon = 1e-9;

}  // namespace rare
