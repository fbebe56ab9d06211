#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rare/commands.hpp"
#include "rare/config.hpp"
#include "rare/errors.hpp"
#include "rare/synthetic.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;
constexpr int kExitFailure = 1;

template <class F>
int guarded(F&& body) {
  try {
    body();
    return 0;
  } catch (const rare::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rare::OracleError& e) {
    std::cerr << "oracle error: " << e.what() << '\n';
    return kExitOracle;
  } catch (const rare::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-informed discovery of rare failures over a finite embedding pool"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configured method and write its artifacts");
  std::string config_path;
  std::string out_dir = "run_output";
  std::optional<std::uint64_t> seed;
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("-o,--out", out_dir, "Artifact directory");
  run->add_option("--seed", seed, "Override the root seed");

  auto* bound = app.add_subcommand("splitting-bound", "Lower bounds for multilevel splitting");
  double p_gamma = 0.0, delta = 0.0;
  std::optional<double> target_rv, budget;
  bound->add_option("--p-gamma", p_gamma, "Failure rate")->required();
  bound->add_option("--delta", delta, "Per-level rate reduction")->required();
  auto* rv_opt = bound->add_option("--target-rv", target_rv, "Target relative variance");
  auto* budget_opt = bound->add_option("--budget", budget, "Simulation budget");
  rv_opt->excludes(budget_opt);

  auto* gen = app.add_subcommand("gen-synthetic", "Write the two-diamond synthetic pool");
  rare::SyntheticSpec spec;
  std::uint64_t noise_seed = 1;
  std::string pool_out, values_out;
  gen->add_option("--n", spec.n, "Pool size");
  gen->add_option("--seed", spec.seed, "Pool seed");
  gen->add_option("--center", spec.center, "Diamond center c");
  gen->add_option("--gamma", spec.gamma, "Failure threshold");
  gen->add_option("--noise-std", spec.noise_std, "Level-1 noise standard deviation");
  gen->add_option("--noise-seed", noise_seed, "Level-1 noise seed");
  gen->add_option("--out", pool_out, "Pool CSV (index,x0,x1,truth_f_level0)")->required();
  gen->add_option("--values-out", values_out, "Oracle CSV (point_index,level,f) for both levels");

  auto* report = app.add_subcommand("score-report", "IS rate estimate and recall for a score file");
  rare::ScoreReportOptions ro;
  report->add_option("--scores", ro.scores_path, "point_index,score or point_index,p_n,h_n")->required();
  report->add_option("--truth", ro.truth_path, "Pool CSV with truth_f_level0")->required();
  report->add_option("--out", ro.out_dir, "Directory for rate_report.csv and retention_recall.csv");
  report->add_option("--method", ro.method, "Label for the report row");
  report->add_option("--gamma", ro.gamma, "Failure threshold");
  report->add_option("--alpha", ro.alpha, "Exponent applied to p_n scores");
  report->add_option("--draws", ro.draws, "Draws per trial");
  report->add_option("--draws-multiple", ro.draws_multiple, "Draws per trial as a multiple of the failure count");
  report->add_option("--trials", ro.trials, "Number of IS trials");
  report->add_option("--seed", ro.seed, "Trial root seed");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    return guarded([&] {
      rare::ExperimentConfig config = rare::load_experiment_config(config_path);
      if (seed) config.seed = *seed;
      rare::run_configured(config, out_dir, std::cerr);
      std::cout << std::filesystem::path(out_dir).string() << '\n';
    });
  }
  if (*bound) {
    return guarded([&] {
      if (!target_rv && !budget) throw rare::InvalidInput("one of --target-rv and --budget is required");
      std::cout << rare::splitting_bound_report(p_gamma, delta, target_rv, budget);
    });
  }
  if (*gen) {
    return guarded([&] { rare::generate_synthetic_files(spec, noise_seed, pool_out, values_out); });
  }
  return guarded([&] {
    const rare::RunOutcome o = rare::score_report(ro);
    std::cout << "p_hat " << o.report.p_hat_mean << "\n100RV " << 100.0 * o.report.relative_variance
              << "\nrecall " << o.report.recall << '\n';
  });
}
