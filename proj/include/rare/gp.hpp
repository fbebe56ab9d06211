#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rare/kernel.hpp"
#include "rare/pool.hpp"

namespace rare {

struct EvaluationRecord {
  AugmentedInput input;
  double value = 0.0;
  int batch = 0;
};

struct Normalization {
  double mean = 0.0;
  double std = 1.0;
};

/// Every oracle evaluation so far. A (point, level) pair can be logged once.
class EvaluationLog {
 public:
  /// Throws InvalidInput on a duplicate input or a non-finite value.
  void add(const AugmentedInput& input, double value, int batch);

  bool contains(const AugmentedInput& input) const;
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<EvaluationRecord>& records() const noexcept { return records_; }

  /// Mean and population std of all values; std falls back to 1 when the
  /// values do not vary.
  Normalization normalization() const;

 private:
  std::vector<EvaluationRecord> records_;
};

struct MeanVar {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// Immutable GP posterior conditioned on an evaluation log. Targets are
/// standardized before fitting; the `normalized_*` accessors work on that
/// scale, everything else reports original units.
class PosteriorState {
 public:
  const EmbeddingPool& pool() const noexcept { return *pool_; }
  const std::shared_ptr<const EmbeddingPool>& pool_ptr() const noexcept { return pool_; }
  const GpHyperparams& hyper() const noexcept { return hyper_; }
  const Normalization& normalization() const noexcept { return norm_; }
  const std::vector<AugmentedInput>& inputs() const noexcept { return inputs_; }
  std::size_t num_train() const noexcept { return inputs_.size(); }

  double gamma() const noexcept { return gamma_; }
  double gamma_normalized() const noexcept { return (gamma_ - norm_.mean) / norm_.std; }

  /// Jitter actually used in the factorization (after any escalation).
  double jitter_used() const noexcept { return jitter_used_; }
  const Eigen::MatrixXd& cholesky() const noexcept { return chol_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  /// L^{-1} k(X_n, q) for each query, one column per query.
  Eigen::MatrixXd projection(std::span<const AugmentedInput> queries) const;

  MeanVar normalized_mean_var(std::span<const AugmentedInput> queries) const;
  Eigen::MatrixXd normalized_cross_cov(std::span<const AugmentedInput> a,
                                       std::span<const AugmentedInput> b) const;

 private:
  friend PosteriorState fit_posterior(std::shared_ptr<const EmbeddingPool> pool,
                                      const EvaluationLog& log, const GpHyperparams& hyper,
                                      double gamma);

  std::shared_ptr<const EmbeddingPool> pool_;
  GpHyperparams hyper_;
  Normalization norm_;
  std::vector<AugmentedInput> inputs_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd weights_;
  double gamma_ = 0.0;
  double jitter_used_ = 0.0;
};

/// Exact GP conditioning. An empty log yields the prior. Throws
/// NumericalFailure if the kernel matrix is not positive definite even at the
/// largest jitter (1e-2 times the base signal variance).
PosteriorState fit_posterior(std::shared_ptr<const EmbeddingPool> pool, const EvaluationLog& log,
                             const GpHyperparams& hyper, double gamma);

/// Posterior means (original units) and latent variances (squared units,
/// clamped at zero).
MeanVar posterior_mean_var(const PosteriorState& state, std::span<const AugmentedInput> queries);

/// cov_n(A, B) of the latent process in squared original units.
Eigen::MatrixXd posterior_cross_cov(const PosteriorState& state, std::span<const AugmentedInput> a,
                                    std::span<const AugmentedInput> b);

struct MllResult {
  double value = 0.0;
  std::vector<double> gradient;  // with respect to GpHyperparams::to_log()
};

/// Gaussian marginal log-likelihood of the standardized targets and its
/// gradient in log-parameter space. Requires at least two records.
MllResult marginal_log_likelihood(const EmbeddingPool& pool, const EvaluationLog& log,
                                  const GpHyperparams& hyper);

struct TrainOptions {
  double learning_rate = 0.05;
  int iterations = 200;
  /// Box on every log parameter; keeps the optimizer away from degenerate kernels.
  double min_log = -9.0;
  double max_log = 7.0;
};

/// Adam ascent on the marginal log-likelihood; returns the best iterate seen.
GpHyperparams train_hyperparameters(const EmbeddingPool& pool, const EvaluationLog& log,
                                    const GpHyperparams& init, const TrainOptions& opts = {});

}  // namespace rare
