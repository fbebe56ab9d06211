#include "rare/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "rare/errors.hpp"

namespace rare {
namespace {

constexpr double kSqrt5 = 2.23606797749978969640917;

Eigen::MatrixXd latent_matrix(const EmbeddingPool& pool, const GpHyperparams& hyper,
                              std::span<const AugmentedInput> a, std::span<const AugmentedInput> b) {
  Eigen::MatrixXd k(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) k(i, j) = latent_kernel(a[i], b[j], pool, hyper);
  return k;
}

Eigen::MatrixXd train_matrix_without_jitter(const EmbeddingPool& pool, const GpHyperparams& hyper,
                                            std::span<const AugmentedInput> x) {
  Eigen::MatrixXd k = latent_matrix(pool, hyper, x, x);
  for (std::size_t i = 0; i < x.size(); ++i) k(i, i) += observation_noise(x[i].level, hyper);
  return k;
}

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Cholesky with the jitter escalated x10 up to 1e-2 * signal variance.
Factorization factorize(const Eigen::MatrixXd& k, const GpHyperparams& hyper) {
  const double max_jitter = std::max(1e-2 * hyper.signal_var, hyper.jitter);
  for (double jitter = hyper.jitter; jitter <= max_jitter * (1.0 + 1e-12); jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd lower = llt.matrixL();
    if ((lower.diagonal().array() > 0.0).all() && lower.allFinite()) return {std::move(lower), jitter};
  }
  throw NumericalFailure("kernel matrix is not positive definite after jitter escalation");
}

Eigen::VectorXd normalized_targets(const EvaluationLog& log, const Normalization& norm) {
  Eigen::VectorXd y(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) y(i) = (log.records()[i].value - norm.mean) / norm.std;
  return y;
}

std::vector<AugmentedInput> log_inputs(const EvaluationLog& log) {
  std::vector<AugmentedInput> x;
  x.reserve(log.size());
  for (const auto& r : log.records()) x.push_back(r.input);
  return x;
}

}  // namespace

void EvaluationLog::add(const AugmentedInput& input, double value, int batch) {
  if (!std::isfinite(value)) throw InvalidInput("evaluation value must be finite");
  if (contains(input))
    throw InvalidInput("input (" + std::to_string(input.point) + ", " +
                       std::to_string(input.level) + ") was already evaluated");
  records_.push_back({input, value, batch});
}

bool EvaluationLog::contains(const AugmentedInput& input) const {
  return std::any_of(records_.begin(), records_.end(),
                     [&](const EvaluationRecord& r) { return r.input == input; });
}

Normalization EvaluationLog::normalization() const {
  Normalization n;
  if (records_.empty()) return n;
  double sum = 0.0;
  for (const auto& r : records_) sum += r.value;
  n.mean = sum / static_cast<double>(records_.size());
  double ss = 0.0;
  for (const auto& r : records_) ss += (r.value - n.mean) * (r.value - n.mean);
  double sd = std::sqrt(ss / static_cast<double>(records_.size()));
  n.std = sd > 1e-12 * std::max(1.0, std::abs(n.mean)) ? sd : 1.0;
  return n;
}

Eigen::MatrixXd PosteriorState::projection(std::span<const AugmentedInput> queries) const {
  if (inputs_.empty()) return Eigen::MatrixXd(0, queries.size());
  Eigen::MatrixXd k = latent_matrix(*pool_, hyper_, inputs_, queries);
  chol_.triangularView<Eigen::Lower>().solveInPlace(k);
  return k;
}

MeanVar PosteriorState::normalized_mean_var(std::span<const AugmentedInput> queries) const {
  MeanVar out{Eigen::VectorXd::Zero(queries.size()), Eigen::VectorXd(queries.size())};
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.var(i) = latent_kernel(queries[i], queries[i], *pool_, hyper_);
  if (!inputs_.empty()) {
    Eigen::MatrixXd k = latent_matrix(*pool_, hyper_, inputs_, queries);
    out.mean = k.transpose() * weights_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(k);
    out.var -= k.colwise().squaredNorm().transpose();
  }
  out.var = out.var.cwiseMax(0.0);
  return out;
}

Eigen::MatrixXd PosteriorState::normalized_cross_cov(std::span<const AugmentedInput> a,
                                                     std::span<const AugmentedInput> b) const {
  Eigen::MatrixXd c = latent_matrix(*pool_, hyper_, a, b);
  if (!inputs_.empty()) c -= projection(a).transpose() * projection(b);
  return c;
}

PosteriorState fit_posterior(std::shared_ptr<const EmbeddingPool> pool, const EvaluationLog& log,
                             const GpHyperparams& hyper, double gamma) {
  if (!pool) throw InvalidInput("fit_posterior needs a pool");
  hyper.validate();
  if (hyper.dim() != pool->dim()) throw InvalidInput("hyperparameter dimension differs from pool");
  PosteriorState s;
  s.pool_ = std::move(pool);
  s.hyper_ = hyper;
  s.gamma_ = gamma;
  s.norm_ = log.normalization();
  s.inputs_ = log_inputs(log);
  for (const auto& in : s.inputs_) {
    if (in.point >= s.pool_->size() || in.level >= hyper.levels())
      throw InvalidInput("logged input outside the pool or fidelity range");
  }
  if (s.inputs_.empty()) {
    s.chol_.resize(0, 0);
    s.weights_.resize(0);
    s.jitter_used_ = hyper.jitter;
    return s;
  }
  Factorization f = factorize(train_matrix_without_jitter(*s.pool_, hyper, s.inputs_), hyper);
  s.chol_ = std::move(f.lower);
  s.jitter_used_ = f.jitter;
  Eigen::VectorXd y = normalized_targets(log, s.norm_);
  s.chol_.triangularView<Eigen::Lower>().solveInPlace(y);
  s.chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  s.weights_ = std::move(y);
  return s;
}

MeanVar posterior_mean_var(const PosteriorState& state, std::span<const AugmentedInput> queries) {
  MeanVar mv = state.normalized_mean_var(queries);
  const auto& n = state.normalization();
  mv.mean = (mv.mean.array() * n.std + n.mean).matrix();
  mv.var *= n.std * n.std;
  return mv;
}

Eigen::MatrixXd posterior_cross_cov(const PosteriorState& state, std::span<const AugmentedInput> a,
                                    std::span<const AugmentedInput> b) {
  const double s = state.normalization().std;
  return state.normalized_cross_cov(a, b) * (s * s);
}

MllResult marginal_log_likelihood(const EmbeddingPool& pool, const EvaluationLog& log,
                                  const GpHyperparams& hyper) {
  if (log.size() < 2) throw InvalidInput("marginal likelihood needs at least two evaluations");
  hyper.validate();
  const auto x = log_inputs(log);
  const std::size_t n = x.size();
  const std::size_t d = hyper.dim();
  Factorization f = factorize(train_matrix_without_jitter(pool, hyper, x), hyper);
  const auto lower = f.lower.triangularView<Eigen::Lower>();

  Eigen::VectorXd y = normalized_targets(log, log.normalization());
  Eigen::VectorXd alpha = lower.solve(y);
  MllResult out;
  out.value = -0.5 * alpha.squaredNorm() - f.lower.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  f.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);

  Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
  lower.solveInPlace(kinv);
  f.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
  // W = alpha alpha^T - K^{-1}; dMLL/dp = 0.5 * sum_ij W_ij dK_ij/dp.
  Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

  out.gradient.assign(hyper.num_params(), 0.0);
  auto level_offset = [&](std::size_t level) { return d + 1 + (level - 1) * (d + 2); };

  std::vector<double> scaled(d);
  auto accumulate = [&](std::span<const double> xa, std::span<const double> xb,
                        std::span<const double> ls, double var, std::size_t offset, double weight) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double z = (xa[j] - xb[j]) / ls[j];
      scaled[j] = z * z;
      r2 += scaled[j];
    }
    double r = std::sqrt(r2);
    double e = std::exp(-kSqrt5 * r);
    double k = var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * e;
    double common = var * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
    for (std::size_t j = 0; j < d; ++j) out.gradient[offset + j] += weight * common * scaled[j];
    out.gradient[offset + d] += weight * k;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k <= i; ++k) {
      // Off-diagonal pairs appear twice in the symmetric sum.
      double weight = 0.5 * w(i, k) * (i == k ? 1.0 : 2.0);
      auto xi = pool.point(x[i].point);
      auto xk = pool.point(x[k].point);
      accumulate(xi, xk, hyper.lengthscales, hyper.signal_var, 0, weight);
      if (x[i].level == x[k].level && x[i].level >= 1) {
        const auto& disc = hyper.discrepancy[x[i].level - 1];
        accumulate(xi, xk, disc.lengthscales, disc.signal_var, level_offset(x[i].level), weight);
      }
    }
    if (x[i].level >= 1) {
      out.gradient[level_offset(x[i].level) + d + 1] +=
          0.5 * w(i, i) * hyper.discrepancy[x[i].level - 1].noise_var;
    }
  }
  return out;
}

GpHyperparams train_hyperparameters(const EmbeddingPool& pool, const EvaluationLog& log,
                                    const GpHyperparams& init, const TrainOptions& opts) {
  if (log.size() < 2) throw InvalidInput("hyperparameter training needs at least two evaluations");
  init.validate();
  if (opts.iterations <= 0) return init;

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  GpHyperparams current = init;
  std::vector<double> theta = init.to_log();
  for (double& t : theta) t = std::clamp(t, opts.min_log, opts.max_log);
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);

  GpHyperparams best = init;
  double best_value = -std::numeric_limits<double>::infinity();
  double b1t = 1.0, b2t = 1.0;
  for (int it = 0; it <= opts.iterations; ++it) {
    current.assign_log(theta);
    MllResult r = marginal_log_likelihood(pool, log, current);
    if (std::isfinite(r.value) && r.value > best_value) {
      best_value = r.value;
      best = it == 0 ? init : current;
    }
    if (it == opts.iterations) break;
    b1t *= kBeta1;
    b2t *= kBeta2;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      double g = std::isfinite(r.gradient[p]) ? r.gradient[p] : 0.0;
      m[p] = kBeta1 * m[p] + (1.0 - kBeta1) * g;
      v[p] = kBeta2 * v[p] + (1.0 - kBeta2) * g * g;
      double step = opts.learning_rate * (m[p] / (1.0 - b1t)) / (std::sqrt(v[p] / (1.0 - b2t)) + kEps);
      theta[p] = std::clamp(theta[p] + step, opts.min_log, opts.max_log);
    }
  }
  return best;
}

}  // namespace rare
