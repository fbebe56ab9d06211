#include "rare/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {
namespace {

ScoreVector normalized(std::vector<double> scores) {
  ScoreVector v;
  double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidInput("scores must have a finite positive sum");
  v.q.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) v.q[i] = scores[i] / total;
  v.scores = std::move(scores);
  return v;
}

// Index i with probability q_i, by binary search over the cumulative sums.
class Sampler {
 public:
  explicit Sampler(const std::vector<double>& q) : cum_(q.size()) {
    std::partial_sum(q.begin(), q.end(), cum_.begin());
  }
  std::size_t draw(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, cum_.back())(rng);
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    return std::min(i, cum_.size() - 1);
  }

 private:
  std::vector<double> cum_;
};

TrialResult run_trial(const ScoreVector& scores, const Sampler& sampler, const TruthFn& truth,
                      std::size_t total_failures, std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  double sum = 0.0;
  std::vector<std::size_t> found;
  for (std::size_t k = 0; k < draws; ++k) {
    std::size_t i = sampler.draw(rng);
    if (!truth(i)) continue;
    sum += inv_n / scores.q[i];
    found.push_back(i);
  }
  std::sort(found.begin(), found.end());
  std::size_t distinct = static_cast<std::size_t>(std::unique(found.begin(), found.end()) - found.begin());
  TrialResult r;
  r.p_hat = sum / static_cast<double>(draws);
  r.recall = total_failures > 0
                 ? static_cast<double>(distinct) / static_cast<double>(total_failures)
                 : std::numeric_limits<double>::quiet_NaN();
  return r;
}

void check_trial_args(const ScoreVector& scores, std::size_t draws) {
  if (scores.size() == 0) throw InvalidInput("empty score vector");
  if (draws == 0) throw InvalidInput("importance sampling needs at least one draw");
}

std::size_t count_failures(const std::vector<char>& truth) {
  return static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(), [](char c) { return c != 0; }));
}

}  // namespace

ScoreVector ScoreVector::from_scores(std::vector<double> scores) {
  for (double& s : scores) {
    if (!std::isfinite(s) || s < 0.0) throw InvalidInput("scores must be finite and nonnegative");
    s = std::max(s, kScoreFloor);
  }
  return normalized(std::move(scores));
}

ScoreVector importance_scores(const FailureField& field, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidInput("importance exponent must be nonnegative");
  std::vector<double> s(field.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::pow(std::max(field.p[i], kScoreFloor), alpha);
  return normalized(std::move(s));
}

TrialResult is_rate_trial(const ScoreVector& scores, const TruthFn& truth,
                          std::size_t total_failures, std::size_t draws, std::uint64_t seed) {
  check_trial_args(scores, draws);
  return run_trial(scores, Sampler(scores.q), truth, total_failures, draws, seed);
}

TrialResult is_rate_trial(const ScoreVector& scores, const std::vector<char>& truth,
                          std::size_t draws, std::uint64_t seed) {
  if (truth.size() != scores.size()) throw InvalidInput("truth and scores differ in length");
  return is_rate_trial(scores, [&](std::size_t i) { return truth[i] != 0; }, count_failures(truth),
                       draws, seed);
}

std::uint64_t trial_seed(std::uint64_t root, std::uint64_t k) { return splitmix64(root + k); }

RateReport repeated_is_trials(const ScoreVector& scores, const TruthFn& truth,
                              std::size_t total_failures, std::optional<double> p_gamma,
                              std::size_t draws, std::size_t trials, std::uint64_t seed) {
  check_trial_args(scores, draws);
  if (trials < 2) throw InvalidInput("repeated trials need at least two trials");
  const Sampler sampler(scores.q);
  std::vector<TrialResult> results(trials);
  parallel_for(trials, [&](std::size_t k) {
    results[k] = run_trial(scores, sampler, truth, total_failures, draws, trial_seed(seed, k));
  });

  const double n = static_cast<double>(trials);
  RateReport r;
  r.trials = trials;
  r.draws = draws;
  for (const auto& t : results) {
    r.p_hat_mean += t.p_hat;
    r.recall += t.recall;
  }
  r.p_hat_mean /= n;
  r.recall /= n;
  double m2 = 0.0, m4 = 0.0, rec2 = 0.0;
  for (const auto& t : results) {
    double d = t.p_hat - r.p_hat_mean;
    m2 += d * d;
    m4 += d * d * d * d;
    rec2 += (t.recall - r.recall) * (t.recall - r.recall);
  }
  const double var = m2 / (n - 1.0);
  m4 /= n;
  // Standard error of the sample variance from the fourth central moment.
  const double se_var = std::sqrt(std::max(0.0, (m4 - var * var * (n - 3.0) / (n - 1.0)) / n));
  r.p_gamma = p_gamma.value_or(r.p_hat_mean);
  const double norm = r.p_gamma * r.p_gamma;
  r.relative_variance = norm > 0.0 ? var / norm : std::numeric_limits<double>::quiet_NaN();
  r.se_relative_variance = norm > 0.0 ? se_var / norm : std::numeric_limits<double>::quiet_NaN();
  r.se_p_hat = std::sqrt(var / n);
  r.se_recall = std::sqrt(rec2 / (n - 1.0) / n);
  return r;
}

RateReport repeated_is_trials(const ScoreVector& scores, const std::vector<char>& truth,
                              std::size_t draws, std::size_t trials, std::uint64_t seed) {
  if (truth.size() != scores.size()) throw InvalidInput("truth and scores differ in length");
  const std::size_t failures = count_failures(truth);
  return repeated_is_trials(
      scores, [&](std::size_t i) { return truth[i] != 0; }, failures,
      static_cast<double>(failures) / static_cast<double>(truth.size()), draws, trials, seed);
}

double expected_rate_estimate(const ScoreVector& scores, const std::vector<char>& truth) {
  if (truth.size() != scores.size()) throw InvalidInput("truth and scores differ in length");
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  double e = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i]) e += scores.q[i] * (inv_n / scores.q[i]);
  return e;
}

std::vector<RecallPoint> retention_recall_curve(const std::vector<double>& ranking_scores,
                                                const std::vector<char>& truth) {
  if (ranking_scores.size() != truth.size()) throw InvalidInput("scores and truth differ in length");
  const std::size_t failures = count_failures(truth);
  if (failures == 0) throw InvalidInput("retention-recall needs at least one failure");
  const std::size_t n = truth.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranking_scores[a] > ranking_scores[b];
  });
  std::vector<std::size_t> found(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) found[k + 1] = found[k] + (truth[order[k]] ? 1 : 0);

  std::vector<RecallPoint> curve;
  for (int half = 1; half <= 20; ++half) {
    double t = 0.5 * half;
    auto top = static_cast<std::size_t>(std::ceil(t * static_cast<double>(failures)));
    top = std::min(top, n);
    curve.push_back({t, static_cast<double>(found[top]) / static_cast<double>(failures)});
  }
  return curve;
}

namespace {

long splitting_levels(double p_gamma, double delta) {
  if (!(p_gamma > 0.0 && p_gamma < 1.0)) throw InvalidInput("p_gamma must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  long k = static_cast<long>(std::floor(std::log(p_gamma) / std::log(1.0 - delta)));
  if (k < 1) throw InvalidInput("p_gamma is reached in fewer than one splitting level");
  return k;
}

void fill_totals(SplittingBound& b, double delta) {
  double n = static_cast<double>(b.particles);
  double k = static_cast<double>(b.levels);
  b.min_simulations = std::lround(n + delta * n * k);
  b.relative_variance = b.particles > 0 ? k * delta / (n * (1.0 - delta))
                                        : std::numeric_limits<double>::infinity();
}

}  // namespace

SplittingBound splitting_bound_for_rv(double p_gamma, double delta, double target_rv) {
  if (!(target_rv > 0.0)) throw InvalidInput("target relative variance must be positive");
  SplittingBound b;
  b.levels = splitting_levels(p_gamma, delta);
  b.particles = static_cast<long>(std::floor(b.levels * delta / (target_rv * (1.0 - delta))));
  fill_totals(b, delta);
  return b;
}

SplittingBound splitting_bound_for_budget(double p_gamma, double delta, double budget) {
  if (!(budget > 0.0)) throw InvalidInput("simulation budget must be positive");
  SplittingBound b;
  b.levels = splitting_levels(p_gamma, delta);
  b.particles = static_cast<long>(std::floor(budget / (1.0 + delta * b.levels)));
  fill_totals(b, delta);
  return b;
}

void write_retention_recall_csv(std::ostream& out, const std::vector<RecallPoint>& curve) {
  out << "retention_multiple,recall\n";
  for (const auto& p : curve) out << format_double(p.retention) << ',' << format_double(p.recall) << '\n';
}

void write_rate_report_csv(std::ostream& out,
                           const std::vector<std::pair<std::string, RateReport>>& rows) {
  out << "method,p_hat_mean,rv,recall,se_rv,se_recall\n";
  for (const auto& [method, r] : rows) {
    out << method << ',' << format_double(r.p_hat_mean) << ',' << format_double(r.relative_variance)
        << ',' << format_double(r.recall) << ',' << format_double(r.se_relative_variance) << ','
        << format_double(r.se_recall) << '\n';
  }
}

}  // namespace rare
