#include "rare/pool.hpp"

#include <cmath>
#include <string>

#include "rare/errors.hpp"

namespace rare {

EmbeddingPool::EmbeddingPool(PointMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw InvalidInput("embedding pool needs at least one point of dimension >= 1");
  if (!points_.allFinite()) throw InvalidInput("embedding pool contains non-finite coordinates");
}

std::vector<double> EmbeddingPool::variances() const {
  std::vector<double> out(dim());
  const double n = static_cast<double>(size());
  for (std::size_t j = 0; j < dim(); ++j) {
    auto col = points_.col(static_cast<Eigen::Index>(j));
    double mean = col.sum() / n;
    out[j] = (col.array() - mean).square().sum() / n;
  }
  return out;
}

void FidelityConfig::validate() const {
  if (costs.empty()) throw InvalidInput("fidelity config needs at least one level");
  if (costs[0] != 1.0) throw InvalidInput("level-0 cost must be exactly 1");
  for (std::size_t l = 1; l < costs.size(); ++l) {
    if (!(costs[l] > 0.0 && costs[l] < 1.0))
      throw InvalidInput("cost of level " + std::to_string(l) + " must lie in (0, 1)");
  }
}

}  // namespace rare
