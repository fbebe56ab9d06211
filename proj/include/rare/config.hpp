#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rare/driver.hpp"
#include "rare/synthetic.hpp"

namespace rare {

/// Raw `[section]` / `key = value` document. Keys keep the line they came from.
struct ConfigValue {
  std::string text;
  int line = 0;
};

class ConfigDocument {
 public:
  /// '#' and ';' start comments; blank lines are ignored. Keys must sit
  /// inside a section and may not repeat within it.
  static ConfigDocument parse(std::istream& in);

  const ConfigValue* find(const std::string& section, const std::string& key) const;
  /// Sections and keys outside `schema` are rejected with their line number.
  void check_schema(const std::map<std::string, std::vector<std::string>>& schema) const;

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::map<std::string, int> section_lines_;
};

enum class PoolKind { kSynthetic, kCsv };
enum class OracleKind { kSynthetic, kCsv, kExternal };
enum class Method { kBams, kBas, kMc, kMcGp, kMcmGp, kCe, kExternalScores };

std::string method_name(Method m);

/// Everything a `run` needs; filled from a config file with defaults.
struct ExperimentConfig {
  // [pool]
  PoolKind pool_kind = PoolKind::kSynthetic;
  std::string pool_path;
  SyntheticSpec synthetic;
  std::optional<std::uint64_t> pool_seed;

  // [fidelity]
  FidelityConfig fidelity;

  // [oracle]
  OracleKind oracle_kind = OracleKind::kSynthetic;
  std::string oracle_path;
  std::string oracle_command;
  double oracle_timeout_s = 300.0;
  std::optional<std::uint64_t> noise_seed;

  // [method]
  Method method = Method::kBams;
  std::string scores_path;
  double eta = 1.0;
  std::size_t clusters = 6;
  std::size_t clusters_initial = 0;
  bool merge_cost_normalized = true;
  bool strict_budget = true;
  std::size_t elites = 5;

  // [budget]
  double initial_budget = 20.0;
  double batch_budget = 15.0;
  int batches = 3;

  // [gp]
  TrainOptions train;

  // [is]
  double gamma = 0.56;
  double alpha = 2.5;
  std::optional<std::size_t> draws;
  double draws_multiple = 5.0;
  std::size_t trials = 200;

  // [seeds]
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> is_seed;

  std::uint64_t effective_pool_seed() const { return pool_seed.value_or(seed); }
  std::uint64_t effective_noise_seed() const;
  std::uint64_t effective_is_seed() const;

  /// Driver settings for the GP-based methods (fidelity reduced to level 0
  /// for the single-fidelity ones).
  RunConfig run_config() const;
};

/// Parse and validate. Errors carry the offending line.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace rare
