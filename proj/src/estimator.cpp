#include "rare/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rare/errors.hpp"
#include "rare/normal.hpp"

namespace rare {
namespace {

std::vector<AugmentedInput> level0(std::span<const std::size_t> points, std::size_t pool_size) {
  std::vector<AugmentedInput> q;
  q.reserve(points.size());
  for (std::size_t i : points) {
    if (i >= pool_size) throw InvalidInput("point index outside the pool");
    q.push_back({i, 0});
  }
  return q;
}

}  // namespace

FailureField failure_prob(const PosteriorState& state, std::span<const std::size_t> points) {
  const auto queries = level0(points, state.pool().size());
  const MeanVar mv = state.normalized_mean_var(queries);
  const double gamma = state.gamma_normalized();
  FailureField field;
  field.p.resize(queries.size());
  field.h.resize(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    double sd = std::sqrt(mv.var(i));
    double p;
    if (sd < kSigmaFloor)
      p = mv.mean(i) <= gamma ? 1.0 : 0.0;
    else
      p = std_normal_cdf((gamma - mv.mean(i)) / sd);
    field.p[i] = p;
    field.h[i] = p * (1.0 - p);
  }
  return field;
}

FailureField failure_prob(const PosteriorState& state) {
  std::vector<std::size_t> all(state.pool().size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return failure_prob(state, all);
}

double estimator_variance_exact(const PosteriorState& state, std::span<const std::size_t> points) {
  if (points.empty()) throw InvalidInput("estimator variance needs at least one point");
  const auto queries = level0(points, state.pool().size());
  const MeanVar mv = state.normalized_mean_var(queries);
  const Eigen::MatrixXd cov = state.normalized_cross_cov(queries, queries);
  const double gamma = state.gamma_normalized();
  const std::size_t n = queries.size();

  std::vector<double> s(n), sd(n), p(n);
  std::vector<char> random(n);
  for (std::size_t i = 0; i < n; ++i) {
    sd[i] = std::sqrt(mv.var(i));
    random[i] = sd[i] >= kSigmaFloor;
    s[i] = random[i] ? (gamma - mv.mean(i)) / sd[i] : 0.0;
    p[i] = random[i] ? std_normal_cdf(s[i]) : (mv.mean(i) <= gamma ? 1.0 : 0.0);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!random[i]) continue;
    total += p[i] * (1.0 - p[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (!random[j]) continue;
      double r = std::clamp(cov(i, j) / (sd[i] * sd[j]), -1.0, 1.0);
      total += 2.0 * (bivariate_normal_cdf(s[i], s[j], r) - p[i] * p[j]);
    }
  }
  return std::max(total, 0.0) / (static_cast<double>(n) * static_cast<double>(n));
}

double variance_upper_bound(const FailureField& field) {
  if (field.size() == 0) throw InvalidInput("variance bound needs a nonempty field");
  double sum = std::accumulate(field.h.begin(), field.h.end(), 0.0);
  return sum / static_cast<double>(field.size());
}

}  // namespace rare
