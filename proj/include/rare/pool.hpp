#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rare {

/// Row-major N x d storage; row i is the embedding of point i.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The finite set of candidate embeddings that defines the empirical distribution.
/// Point ids are the dense row indices 0..N-1.
class EmbeddingPool {
 public:
  explicit EmbeddingPool(PointMatrix points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }

  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim(), dim()};
  }
  const PointMatrix& points() const noexcept { return points_; }

  /// Per-dimension population variance of the pool.
  std::vector<double> variances() const;

 private:
  PointMatrix points_;
};

/// Evaluation cost per fidelity level; level 0 is the ground-truth simulator.
struct FidelityConfig {
  std::vector<double> costs{1.0};

  std::size_t levels() const noexcept { return costs.size(); }
  double cost(std::size_t level) const { return costs.at(level); }

  /// Throws InvalidInput unless costs[0] == 1 and every other cost is in (0, 1).
  void validate() const;

  static FidelityConfig single() { return {}; }
};

/// A (point, fidelity level) pair.
struct AugmentedInput {
  std::size_t point = 0;
  std::size_t level = 0;

  friend auto operator<=>(const AugmentedInput&, const AugmentedInput&) = default;
};

}  // namespace rare
