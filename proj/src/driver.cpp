#include "rare/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "rare/baselines.hpp"
#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string describe(const AugmentedInput& in) {
  return "point " + std::to_string(in.point) + " level " + std::to_string(in.level);
}

GpHyperparams initial_hyper(const EmbeddingPool& pool, std::size_t levels) {
  GpHyperparams h = GpHyperparams::defaults(pool.dim(), levels);
  const auto var = pool.variances();
  for (std::size_t j = 0; j < pool.dim(); ++j) {
    double ls = var[j] > 0.0 ? std::sqrt(var[j]) : 1.0;
    h.lengthscales[j] = ls;
    for (auto& d : h.discrepancy) d.lengthscales[j] = ls;
  }
  return h;
}

BatchRecord record_batch(int batch, std::vector<Selection> selected, const EvaluationLog& log,
                         const PosteriorState& state) {
  BatchRecord r;
  r.batch = batch;
  r.selected = std::move(selected);
  r.hyper = state.hyper();
  r.field = failure_prob(state);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : log.records())
    if (rec.batch == batch) {
      sum += rec.value;
      ++count;
    }
  r.mean_f = count > 0 ? sum / static_cast<double>(count) : kNaN;
  return r;
}

PosteriorState refit(const std::shared_ptr<const EmbeddingPool>& pool, const EvaluationLog& log,
                     const GpHyperparams& warm, const RunConfig& config) {
  GpHyperparams hyper = log.size() >= 2 ? train_hyperparameters(*pool, log, warm, config.train) : warm;
  return fit_posterior(pool, log, hyper, config.gamma);
}

}  // namespace

void RunConfig::validate() const {
  if (!(initial_budget > 0.0)) throw InvalidInput("initial budget must be positive");
  if (!(batch_budget > 0.0)) throw InvalidInput("batch budget must be positive");
  if (batches < 1) throw InvalidInput("at least one batch is required");
  if (clusters < 1) throw InvalidInput("at least one cluster is required");
  if (clusters_initial != 0 && clusters_initial < clusters)
    throw InvalidInput("initial cluster count must not be below the cluster count");
  if (!(eta >= 1.0)) throw InvalidInput("overbudget parameter eta must be >= 1");
  if (!std::isfinite(gamma)) throw InvalidInput("threshold gamma must be finite");
  fidelity.validate();
}

std::uint64_t initial_batch_seed(std::uint64_t root) { return splitmix64(root ^ 0x5a5a5a5a5a5a5a5aULL); }

std::uint64_t batch_seed(std::uint64_t root, int batch) {
  return splitmix64(splitmix64(root) + static_cast<std::uint64_t>(batch));
}

double evaluate_input(Oracle& oracle, const AugmentedInput& input) {
  const std::string where = describe(input) + ": ";
  double f;
  try {
    f = oracle.evaluate(input);
  } catch (const OracleTimeout& e) {
    throw OracleTimeout(where + e.what());
  } catch (const OracleProtocolError& e) {
    throw OracleProtocolError(where + e.what());
  } catch (const OracleExited& e) {
    throw OracleExited(where + e.what());
  } catch (const OracleError& e) {
    throw OracleError(where + e.what());
  }
  if (!std::isfinite(f)) throw OracleProtocolError(where + "oracle returned a non-finite value");
  return f;
}

EvaluationLog run_initial_batch(const EmbeddingPool& pool, const RunConfig& config, Oracle& oracle) {
  config.validate();
  EvaluationLog log;
  for (const auto& in :
       random_acquisition(pool, config.fidelity, log, config.initial_budget, initial_batch_seed(config.seed)))
    log.add(in, evaluate_input(oracle, in), 1);
  return log;
}

double cluster_budget(const RunConfig& config, std::size_t cluster_size, std::size_t pool_size) {
  return std::ceil(config.eta * config.batch_budget * static_cast<double>(cluster_size) /
                   static_cast<double>(pool_size));
}

std::vector<Selection> merge_queues(const std::vector<std::vector<Selection>>& queues, double budget,
                                    bool cost_normalized, bool strict_budget) {
  std::vector<std::size_t> head(queues.size(), 0);
  std::vector<Selection> picked;
  double spent = 0.0;
  auto fits = [&](double cost) {
    return strict_budget ? spent + cost < budget - kCostEpsilon : spent + cost <= budget + kCostEpsilon;
  };
  auto key = [&](const Selection& s) {
    double dj = std::isnan(s.delta_j) ? 0.0 : std::min(s.delta_j, 0.0);
    return cost_normalized ? dj / s.cost : dj;
  };
  while (spent < budget - kCostEpsilon) {
    std::optional<std::size_t> best;
    for (std::size_t q = 0; q < queues.size(); ++q) {
      if (head[q] >= queues[q].size()) continue;
      const Selection& s = queues[q][head[q]];
      if (!fits(s.cost)) continue;
      if (!best) {
        best = q;
        continue;
      }
      const Selection& b = queues[*best][head[*best]];
      if (key(s) < key(b) || (key(s) == key(b) && s.input < b.input)) best = q;
    }
    if (!best) break;
    const Selection& s = queues[*best][head[*best]++];
    spent += s.cost;
    picked.push_back(s);
  }
  return picked;
}

BatchPlan plan_bams_batch(const PosteriorState& state, const EvaluationLog& log,
                          const RunConfig& config, int batch) {
  config.validate();
  const EmbeddingPool& pool = state.pool();
  const std::size_t n = pool.size();
  const std::size_t initial = std::min(config.effective_initial_clusters(), n);
  const std::size_t count = std::min(config.clusters, initial);
  BatchPlan plan;
  plan.clusters = cluster_with_merges(pool, state.hyper(), count, initial, batch_seed(config.seed, batch));
  const auto members = plan.clusters.members();
  plan.queues.assign(members.size(), {});

  const std::size_t levels = config.fidelity.levels();
  if (levels > state.hyper().levels()) throw InvalidInput("fidelity levels exceed the GP levels");
  parallel_for(members.size(), [&](std::size_t s) {
    std::vector<AugmentedInput> targets;
    std::vector<Candidate> candidates;
    for (std::size_t i : members[s]) {
      targets.push_back({i, 0});
      for (std::size_t l = 0; l < levels; ++l)
        if (!log.contains({i, l})) candidates.push_back({{i, l}, config.fidelity.cost(l)});
    }
    if (candidates.empty()) return;
    const double scale = static_cast<double>(members[s].size()) / static_cast<double>(n);
    std::vector<Selection> queue;
    try {
      queue = select_batch(state, candidates, targets, cluster_budget(config, members[s].size(), n),
                           config.selector);
    } catch (const EmptySelection&) {
      return;
    }
    for (auto& sel : queue) sel.delta_j *= scale;
    plan.queues[s] = std::move(queue);
  });
  plan.selected = merge_queues(plan.queues, config.batch_budget, config.merge_cost_normalized,
                               config.strict_budget);
  return plan;
}

std::vector<Selection> run_bams_batch(const PosteriorState& state, EvaluationLog& log,
                                      const RunConfig& config, Oracle& oracle, int batch) {
  BatchPlan plan = plan_bams_batch(state, log, config, batch);
  for (const auto& sel : plan.selected) log.add(sel.input, evaluate_input(oracle, sel.input), batch);
  return plan.selected;
}

ExperimentResult run_experiment(std::shared_ptr<const EmbeddingPool> pool, const RunConfig& config,
                                Oracle& oracle) {
  if (!pool) throw InvalidInput("run_experiment needs a pool");
  config.validate();
  ExperimentResult result;
  result.log = run_initial_batch(*pool, config, oracle);
  std::vector<Selection> first;
  for (const auto& rec : result.log.records())
    first.push_back({rec.input, kNaN, config.fidelity.cost(rec.input.level)});

  PosteriorState state = refit(pool, result.log, initial_hyper(*pool, config.fidelity.levels()), config);
  result.batches.push_back(record_batch(1, std::move(first), result.log, state));

  for (int b = 2; b <= config.batches; ++b) {
    std::vector<Selection> picks;
    if (config.acquisition == AcquisitionKind::kVarianceBound) {
      picks = run_bams_batch(state, result.log, config, oracle, b);
    } else {
      for (const auto& in : random_acquisition(*pool, config.fidelity, result.log, config.batch_budget,
                                               batch_seed(config.seed, b))) {
        result.log.add(in, evaluate_input(oracle, in), b);
        picks.push_back({in, kNaN, config.fidelity.cost(in.level)});
      }
    }
    state = refit(pool, result.log, state.hyper(), config);
    result.batches.push_back(record_batch(b, std::move(picks), result.log, state));
  }
  result.final_state = std::move(state);
  return result;
}

void write_experiment(const std::string& dir, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw InvalidInput("cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("log.csv");
    out << "point_index,level,f,batch\n";
    for (const auto& r : result.log.records())
      out << r.input.point << ',' << r.input.level << ',' << format_double(r.value) << ',' << r.batch << '\n';
  }
  for (const auto& b : result.batches) {
    const std::string k = std::to_string(b.batch);
    {
      auto out = open("scores_batch" + k + ".csv");
      out << "point_index,p_n,h_n\n";
      for (std::size_t i = 0; i < b.field.size(); ++i)
        out << i << ',' << format_double(b.field.p[i]) << ',' << format_double(b.field.h[i]) << '\n';
    }
    {
      auto out = open("selected_batch" + k + ".csv");
      out << "point_index,level,deltaJ,cost\n";
      for (const auto& s : b.selected)
        out << s.input.point << ',' << s.input.level << ',' << format_double(s.delta_j) << ','
            << format_double(s.cost) << '\n';
    }
    auto out = open("hyperparams_batch" + k + ".txt");
    out << to_text(b.hyper);
  }
}

}  // namespace rare
