#pragma once

#include <span>
#include <vector>

#include "rare/gp.hpp"

namespace rare {

/// Below this posterior standard deviation a point is treated as deterministic.
inline constexpr double kSigmaFloor = 1e-12;

/// Level-0 failure probabilities p_n(x) = P(theta_n(x) <= gamma) and point
/// variances h_n = p_n (1 - p_n).
struct FailureField {
  std::vector<double> p;
  std::vector<double> h;

  std::size_t size() const noexcept { return p.size(); }
};

/// Failure probability of each query at its level-0 projection.
FailureField failure_prob(const PosteriorState& state, std::span<const std::size_t> points);
FailureField failure_prob(const PosteriorState& state);  // the whole pool

/// Exact Var(p_hat) of the plug-in estimator over the given points; O(N^2)
/// bivariate-normal evaluations.
double estimator_variance_exact(const PosteriorState& state, std::span<const std::size_t> points);

/// Average point variance, an upper bound on estimator_variance_exact.
double variance_upper_bound(const FailureField& field);

}  // namespace rare
