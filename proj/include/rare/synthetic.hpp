#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "rare/oracle.hpp"
#include "rare/pool.hpp"

namespace rare {

/// Two-diamond benchmark on a standard-normal pool in two dimensions.
struct SyntheticSpec {
  std::size_t n = 20000;
  double center = 1.95;
  double gamma = 0.56;
  double noise_std = 0.1;
  double level1_cost = 0.10;
  std::uint64_t seed = 0;
};

EmbeddingPool generate_pool(const SyntheticSpec& spec);

/// | |x0| - c | + | x1 - c |, the level-0 objective.
double synthetic_objective(std::span<const double> x, double center);

/// Level 0 is exact; level 1 adds N(0, noise_std^2) noise that is a
/// deterministic function of (point index, noise seed).
double synthetic_oracle(const EmbeddingPool& pool, const AugmentedInput& input,
                        const SyntheticSpec& spec, std::uint64_t noise_seed);

std::vector<char> ground_truth_labels(const EmbeddingPool& pool, const SyntheticSpec& spec);

class SyntheticOracle : public Oracle {
 public:
  SyntheticOracle(std::shared_ptr<const EmbeddingPool> pool, SyntheticSpec spec,
                  std::uint64_t noise_seed)
      : pool_(std::move(pool)), spec_(spec), noise_seed_(noise_seed) {}
  double evaluate(const AugmentedInput& input) override;

 private:
  std::shared_ptr<const EmbeddingPool> pool_;
  SyntheticSpec spec_;
  std::uint64_t noise_seed_;
};

/// CSV `index,x0,x1,truth_f_level0`.
void write_synthetic_pool_csv(std::ostream& out, const EmbeddingPool& pool,
                              const SyntheticSpec& spec);

}  // namespace rare
