#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rare/pool.hpp"

namespace rare {

/// Kernel parameters of the additive discrepancy process for one level l >= 1.
struct DiscrepancyParams {
  std::vector<double> lengthscales;
  double signal_var = 0.1;
  double noise_var = 1e-2;
};

/// Hyperparameters of the multifidelity GP. The base kernel models level 0;
/// discrepancy[l - 1] describes the independent process added at level l.
/// `jitter` is a numerical diagonal term, not part of the observation model.
struct GpHyperparams {
  std::vector<double> lengthscales;
  double signal_var = 1.0;
  std::vector<DiscrepancyParams> discrepancy;
  double jitter = 1e-6;

  std::size_t dim() const noexcept { return lengthscales.size(); }
  std::size_t levels() const noexcept { return discrepancy.size() + 1; }

  /// Number of trainable parameters: every lengthscale, signal and noise
  /// variance. The jitter is held fixed.
  std::size_t num_params() const noexcept;

  /// Trainable parameters in log space, ordered: base lengthscales, base signal
  /// variance, then per level l >= 1: lengthscales, signal variance, noise variance.
  std::vector<double> to_log() const;
  void assign_log(std::span<const double> log_params);

  /// Throws InvalidInput on a non-positive value or inconsistent dimensions.
  void validate() const;

  static GpHyperparams defaults(std::size_t dim, std::size_t levels);
};

/// Flat `key = value` serialization (keys: lengthscale.<dim>, signal_var,
/// fid<l>.lengthscale.<dim>, fid<l>.signal_var, fid<l>.noise_var, jitter).
std::string to_text(const GpHyperparams& hyper);
GpHyperparams hyperparams_from_text(std::string_view text);

/// Matern nu = 5/2 with per-dimension lengthscales.
double matern25(std::span<const double> x, std::span<const double> x2,
                std::span<const double> lengthscales, double signal_var);

/// Base kernel k(x, x2) of the level-0 process.
double matern25_kernel(std::span<const double> x, std::span<const double> x2,
                       const GpHyperparams& hyper);

/// Observation noise variance at a level: zero at level 0, noise_var above.
double observation_noise(std::size_t level, const GpHyperparams& hyper);

/// Covariance of the latent values theta(a), theta(b):
/// k(x, x') + delta_ab k_a(x, x').
double latent_kernel(const AugmentedInput& a, const AugmentedInput& b,
                     const EmbeddingPool& pool, const GpHyperparams& hyper);

/// Covariance of observations: latent kernel plus observation noise and jitter
/// when a and b are the same augmented input.
double multifidelity_kernel(const AugmentedInput& a, const AugmentedInput& b,
                            const EmbeddingPool& pool, const GpHyperparams& hyper);

}  // namespace rare
