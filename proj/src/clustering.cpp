#include "rare/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {
namespace {

double squared_distance(const PointMatrix& a, std::size_t i, const PointMatrix& b, std::size_t j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// Nearest center per point; ties go to the lowest center index.
std::vector<std::size_t> assign(const PointMatrix& points, const PointMatrix& centers,
                                std::vector<double>* dist2 = nullptr) {
  const std::size_t n = points.rows();
  std::vector<std::size_t> labels(n);
  if (dist2) dist2->assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      double d = squared_distance(points, i, centers, c);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[i] = arg;
    if (dist2) (*dist2)[i] = best;
  });
  return labels;
}

PointMatrix seed_centers(const PointMatrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  PointMatrix centers(k, points.cols());
  std::vector<char> used(n, 0);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  centers.row(0) = points.row(first);
  used[first] = 1;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points, i, centers, 0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc >= u) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      // Every remaining point coincides with a center.
      pick = static_cast<std::size_t>(std::find(used.begin(), used.end(), 0) - used.begin());
    }
    centers.row(c) = points.row(pick);
    used[pick] = 1;
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points, i, centers, c));
  }
  return centers;
}

}  // namespace

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> s(count, 0);
  for (std::size_t l : labels) ++s[l];
  return s;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> m(count);
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  return m;
}

PointMatrix scale_points(const EmbeddingPool& pool, const GpHyperparams& hyper) {
  if (hyper.dim() != pool.dim()) throw InvalidInput("lengthscale count differs from pool dimension");
  PointMatrix z = pool.points();
  for (std::size_t j = 0; j < pool.dim(); ++j) z.col(j) /= hyper.lengthscales[j];
  return z;
}

ClusterAssignment kmeans(const PointMatrix& points, std::size_t k, std::uint64_t seed, int max_iters) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n) throw InvalidInput("k-means needs 1 <= k <= number of points");
  std::mt19937_64 rng(seed);
  PointMatrix centers = seed_centers(points, k, rng);
  std::vector<double> d2;
  std::vector<std::size_t> labels = assign(points, centers, &d2);

  for (int it = 0; it < max_iters; ++it) {
    PointMatrix sums = PointMatrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[labels[i]];
    }
    std::vector<char> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Re-seed an empty cluster at the point farthest from its centroid.
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && d2[i] > best) {
          best = d2[i];
          far = i;
        }
      taken[far] = 1;
      centers.row(c) = points.row(far);
    }
    std::vector<std::size_t> next = assign(points, centers, &d2);
    if (next == labels) break;
    labels = std::move(next);
  }

  // Dense relabel; a center that ended with no members is dropped.
  std::vector<std::size_t> remap(k, k);
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (std::find(labels.begin(), labels.end(), c) != labels.end()) remap[c] = used++;
  ClusterAssignment out;
  out.count = used;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = remap[labels[i]];
  return out;
}

double hausdorff_distance(const PointMatrix& points, std::span<const std::size_t> a,
                          std::span<const std::size_t> b) {
  if (a.empty() || b.empty()) throw InvalidInput("Hausdorff distance of an empty set");
  auto directed = [&](std::span<const std::size_t> from, std::span<const std::size_t> to) {
    std::vector<double> nearest(from.size());
    parallel_for(from.size(), [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j : to) best = std::min(best, squared_distance(points, from[i], points, j));
      nearest[i] = best;
    });
    return *std::max_element(nearest.begin(), nearest.end());
  };
  return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

double hausdorff_distance(const PointMatrix& a, const PointMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidInput("Hausdorff distance of an empty set");
  if (a.cols() != b.cols()) throw InvalidInput("Hausdorff distance between different dimensions");
  PointMatrix both(a.rows() + b.rows(), a.cols());
  both << a, b;
  std::vector<std::size_t> ia(a.rows()), ib(b.rows());
  for (std::size_t i = 0; i < ia.size(); ++i) ia[i] = i;
  for (std::size_t i = 0; i < ib.size(); ++i) ib[i] = a.rows() + i;
  return hausdorff_distance(both, ia, ib);
}

ClusterAssignment cluster_with_merges(const PointMatrix& scaled, std::size_t count,
                                      std::size_t initial_count, std::uint64_t seed,
                                      std::vector<MergeStep>* trace) {
  const std::size_t n = scaled.rows();
  if (count == 0 || count > initial_count || initial_count > n)
    throw InvalidInput("clustering needs 1 <= count <= initial count <= number of points");
  ClusterAssignment base = kmeans(scaled, initial_count, seed);
  auto groups = base.members();
  std::vector<char> alive(base.count, 1);
  std::size_t live = base.count;
  if (trace) trace->clear();

  while (live > count) {
    std::size_t smallest = base.count;
    for (std::size_t c = 0; c < base.count; ++c)
      if (alive[c] && (smallest == base.count || groups[c].size() < groups[smallest].size()))
        smallest = c;
    std::size_t nearest = base.count;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < base.count; ++c) {
      if (!alive[c] || c == smallest) continue;
      double d = hausdorff_distance(scaled, groups[smallest], groups[c]);
      if (d < best) {
        best = d;
        nearest = c;
      }
    }
    auto& into = groups[nearest];
    into.insert(into.end(), groups[smallest].begin(), groups[smallest].end());
    std::sort(into.begin(), into.end());
    groups[smallest].clear();
    alive[smallest] = 0;
    --live;
    if (trace) trace->push_back({smallest, nearest});
  }

  ClusterAssignment out;
  out.labels.assign(n, 0);
  for (std::size_t c = 0; c < base.count; ++c) {
    if (!alive[c]) continue;
    for (std::size_t i : groups[c]) out.labels[i] = out.count;
    ++out.count;
  }
  return out;
}

ClusterAssignment cluster_with_merges(const EmbeddingPool& pool, const GpHyperparams& hyper,
                                      std::size_t count, std::size_t initial_count,
                                      std::uint64_t seed, std::vector<MergeStep>* trace) {
  return cluster_with_merges(scale_points(pool, hyper), count, initial_count, seed, trace);
}

}  // namespace rare
