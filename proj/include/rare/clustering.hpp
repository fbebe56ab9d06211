#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rare/kernel.hpp"
#include "rare/pool.hpp"

namespace rare {

/// Cluster label per point; labels are dense in 0..count-1.
struct ClusterAssignment {
  std::vector<std::size_t> labels;
  std::size_t count = 0;

  std::vector<std::size_t> sizes() const;
  std::vector<std::vector<std::size_t>> members() const;
};

/// Divide each coordinate by the level-0 lengthscale of its dimension.
PointMatrix scale_points(const EmbeddingPool& pool, const GpHyperparams& hyper);

/// Lloyd's algorithm with k-means++ seeding; stops when assignments are
/// stable or after `max_iters`. Empty clusters are re-seeded with the point
/// farthest from its centroid.
ClusterAssignment kmeans(const PointMatrix& points, std::size_t k, std::uint64_t seed,
                         int max_iters = 100);

/// Symmetric Hausdorff distance between two nonempty subsets of `points`.
double hausdorff_distance(const PointMatrix& points, std::span<const std::size_t> a,
                          std::span<const std::size_t> b);

/// Hausdorff distance between two point sets given as matrices.
double hausdorff_distance(const PointMatrix& a, const PointMatrix& b);

/// One merge of the smallest cluster into its Hausdorff-nearest neighbour,
/// in the k-means labels in force at that step.
struct MergeStep {
  std::size_t removed;
  std::size_t into;
};

/// k-means with `initial_count` clusters on lengthscale-scaled points, then
/// initial_count - count merges of the smallest cluster into its
/// Hausdorff-nearest neighbour (ties: lowest id). Returns exactly `count`
/// clusters relabelled in order of their surviving k-means id.
ClusterAssignment cluster_with_merges(const EmbeddingPool& pool, const GpHyperparams& hyper,
                                      std::size_t count, std::size_t initial_count,
                                      std::uint64_t seed, std::vector<MergeStep>* trace = nullptr);

/// Same, on already-scaled points.
ClusterAssignment cluster_with_merges(const PointMatrix& scaled, std::size_t count,
                                      std::size_t initial_count, std::uint64_t seed,
                                      std::vector<MergeStep>* trace = nullptr);

}  // namespace rare
