#include "rare/synthetic.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {

EmbeddingPool generate_pool(const SyntheticSpec& spec) {
  if (spec.n == 0) throw InvalidInput("synthetic pool needs at least one point");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  PointMatrix x(spec.n, 2);
  for (std::size_t i = 0; i < spec.n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
  }
  return EmbeddingPool(std::move(x));
}

double synthetic_objective(std::span<const double> x, double center) {
  if (x.size() != 2) throw InvalidInput("synthetic objective is two-dimensional");
  return std::abs(std::abs(x[0]) - center) + std::abs(x[1] - center);
}

double synthetic_oracle(const EmbeddingPool& pool, const AugmentedInput& input,
                        const SyntheticSpec& spec, std::uint64_t noise_seed) {
  if (input.point >= pool.size()) throw InvalidInput("point index outside the pool");
  if (input.level > 1) throw InvalidInput("synthetic oracle has levels 0 and 1");
  double f = synthetic_objective(pool.point(input.point), spec.center);
  if (input.level == 0) return f;
  std::mt19937_64 rng(splitmix64(noise_seed ^ splitmix64(input.point)));
  return f + spec.noise_std * std::normal_distribution<double>()(rng);
}

std::vector<char> ground_truth_labels(const EmbeddingPool& pool, const SyntheticSpec& spec) {
  std::vector<char> labels(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    labels[i] = synthetic_objective(pool.point(i), spec.center) <= spec.gamma;
  return labels;
}

double SyntheticOracle::evaluate(const AugmentedInput& input) {
  return synthetic_oracle(*pool_, input, spec_, noise_seed_);
}

void write_synthetic_pool_csv(std::ostream& out, const EmbeddingPool& pool,
                              const SyntheticSpec& spec) {
  out << "index,x0,x1,truth_f_level0\n";
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto x = pool.point(i);
    out << i << ',' << format_double(x[0]) << ',' << format_double(x[1]) << ','
        << format_double(synthetic_objective(x, spec.center)) << '\n';
  }
}

}  // namespace rare
