#include "rare/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "rare/baselines.hpp"
#include "rare/driver.hpp"
#include "rare/errors.hpp"
#include "rare/oracle.hpp"
#include "rare/synthetic.hpp"
#include "rare/util.hpp"

namespace rare {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

/// Level-0 failure labels, known up front or fetched through the oracle.
struct Truth {
  std::optional<std::vector<char>> labels;
  TruthFn fn;
  std::size_t failures = 0;
};

Truth known_truth(std::vector<char> labels) {
  Truth t;
  for (char c : labels) t.failures += c != 0;
  t.labels = std::move(labels);
  return t;
}

std::vector<char> labels_from_values(const std::vector<double>& f, double gamma) {
  std::vector<char> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] <= gamma ? 1 : 0;
  return out;
}

class LiveTruth {
 public:
  LiveTruth(Oracle& oracle, double gamma, const EvaluationLog& log) : oracle_(oracle), gamma_(gamma) {
    for (const auto& r : log.records())
      if (r.input.level == 0) cache_[r.input.point] = r.value;
  }

  bool operator()(std::size_t i) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(i);
    if (it == cache_.end()) it = cache_.emplace(i, evaluate_input(oracle_, {i, 0})).first;
    return it->second <= gamma_;
  }

 private:
  Oracle& oracle_;
  double gamma_;
  std::map<std::size_t, double> cache_;
  std::mutex mutex_;
};

std::size_t draw_count(std::optional<std::size_t> draws, double multiple, std::optional<std::size_t> failures) {
  if (draws) return *draws;
  if (!failures)
    throw ConfigError(0, "[is] draws must be set when the failure count is unknown");
  if (*failures == 0) throw InvalidInput("the pool has no failures at this threshold; set [is] draws");
  return static_cast<std::size_t>(std::ceil(multiple * static_cast<double>(*failures)));
}

void write_reports(const fs::path& dir, const RunOutcome& outcome) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "rate_report.csv");
    write_rate_report_csv(out, {{outcome.method, outcome.report}});
  }
  auto out = open_out(dir / "retention_recall.csv");
  write_retention_recall_csv(out, outcome.curve);
}

void write_ce(const fs::path& dir, const CeResult& ce) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "log.csv");
    out << "point_index,level,f,batch\n";
    for (const auto& r : ce.log.records())
      out << r.input.point << ',' << r.input.level << ',' << format_double(r.value) << ',' << r.batch << '\n';
  }
  for (std::size_t b = 0; b < ce.batch_points.size(); ++b) {
    auto out = open_out(dir / ("selected_batch" + std::to_string(b + 1) + ".csv"));
    out << "point_index,level,deltaJ,cost\n";
    for (auto i : ce.batch_points[b]) out << i << ",0,nan,1\n";
  }
  auto out = open_out(dir / "ce_state.txt");
  out << "mean";
  for (double m : ce.state.mean) out << ' ' << format_double(m);
  out << "\nvariance";
  for (double v : ce.state.var) out << ' ' << format_double(v);
  out << '\n';
}

void write_scores(const fs::path& dir, const std::string& name, const ScoreVector& s) {
  fs::create_directories(dir);
  auto out = open_out(dir / name);
  out << "point_index,score,q\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << i << ',' << format_double(s.scores[i]) << ',' << format_double(s.q[i]) << '\n';
}

std::unique_ptr<Oracle> make_oracle(const ExperimentConfig& c, std::shared_ptr<const EmbeddingPool> pool) {
  switch (c.oracle_kind) {
    case OracleKind::kSynthetic:
      return std::make_unique<SyntheticOracle>(std::move(pool), c.synthetic, c.effective_noise_seed());
    case OracleKind::kCsv:
      return std::make_unique<CsvOracle>(CsvOracle::load(c.oracle_path));
    case OracleKind::kExternal: {
      auto argv = split_command(c.oracle_command);
      if (argv.empty()) throw ConfigError(0, "external oracle command is empty");
      const auto ms = std::chrono::milliseconds(static_cast<long long>(std::llround(c.oracle_timeout_s * 1000.0)));
      return std::make_unique<ExternalOracle>(std::move(argv), ms);
    }
  }
  throw InvalidInput("unknown oracle kind");
}

}  // namespace

PoolData read_pool_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open pool file " + path);
  std::string line;
  int lineno = 0;
  std::vector<int> coord_col;  // coordinate j -> column
  int truth_col = -1;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  {
    auto header = split(line, ',');
    width = header.size();
    std::map<std::size_t, int> coords;
    for (std::size_t c = 0; c < header.size(); ++c) {
      std::string h(trim(header[c]));
      if (h == "truth_f_level0") {
        truth_col = static_cast<int>(c);
      } else if (h.size() > 1 && h[0] == 'x') {
        try {
          long j = parse_long(h.substr(1));
          if (j < 0 || coords.count(static_cast<std::size_t>(j))) throw InvalidInput("bad coordinate");
          coords[static_cast<std::size_t>(j)] = static_cast<int>(c);
        } catch (const InvalidInput&) {
          throw ConfigError(lineno, path + ": unexpected column '" + h + "'");
        }
      }
    }
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (!coords.count(j)) throw ConfigError(lineno, path + ": coordinate columns must be x0..x{d-1}");
      coord_col.push_back(coords[j]);
    }
    if (coord_col.empty()) throw ConfigError(lineno, path + ": no coordinate columns x0, x1, ...");
  }
  std::vector<double> values;
  std::vector<double> truth;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != width)
      throw ConfigError(lineno, path + ": expected " + std::to_string(width) + " fields");
    try {
      for (int c : coord_col) values.push_back(parse_double(fields[c]));
      if (truth_col >= 0) truth.push_back(parse_double(fields[truth_col]));
    } catch (const InvalidInput& e) {
      throw ConfigError(lineno, path + ": " + e.what());
    }
    ++rows;
  }
  if (rows == 0) throw ConfigError(lineno, path + ": pool has no points");
  PointMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(coord_col.size()));
  std::copy(values.begin(), values.end(), m.data());
  PoolData d;
  d.pool = std::make_shared<EmbeddingPool>(std::move(m));
  if (truth_col >= 0) d.truth_f = std::move(truth);
  return d;
}

RunOutcome run_configured(const ExperimentConfig& c, const std::string& out_dir, std::ostream& progress) {
  const fs::path dir(out_dir);
  RunOutcome outcome;
  outcome.method = method_name(c.method);

  std::shared_ptr<const EmbeddingPool> pool;
  Truth truth;
  bool truth_known = false;
  if (c.pool_kind == PoolKind::kSynthetic) {
    SyntheticSpec spec = c.synthetic;
    spec.seed = c.effective_pool_seed();
    pool = std::make_shared<EmbeddingPool>(generate_pool(spec));
    truth = known_truth(ground_truth_labels(*pool, spec));
    truth_known = true;
  } else {
    PoolData data = read_pool_csv(c.pool_path);
    pool = data.pool;
    if (data.truth_f) {
      truth = known_truth(labels_from_values(*data.truth_f, c.gamma));
      truth_known = true;
    }
  }
  progress << "pool: " << pool->size() << " points in " << pool->dim() << " dimensions\n";

  std::unique_ptr<Oracle> oracle;
  if (c.method != Method::kMc && c.method != Method::kExternalScores) oracle = make_oracle(c, pool);
  if (!truth_known && c.oracle_kind == OracleKind::kCsv) {
    const CsvOracle table = CsvOracle::load(c.oracle_path);
    std::vector<double> f(pool->size());
    bool complete = true;
    for (std::size_t i = 0; i < pool->size() && complete; ++i) {
      auto v = table.lookup({i, 0});
      complete = v.has_value();
      if (complete) f[i] = *v;
    }
    if (complete) {
      truth = known_truth(labels_from_values(f, c.gamma));
      truth_known = true;
    }
  }

  ScoreVector scores;
  std::vector<double> ranking;
  EvaluationLog evaluated;
  switch (c.method) {
    case Method::kBams:
    case Method::kBas:
    case Method::kMcGp:
    case Method::kMcmGp: {
      const RunConfig rc = c.run_config();
      rc.validate();
      ExperimentResult result = run_experiment(pool, rc, *oracle);
      for (const auto& b : result.batches)
        progress << "batch " << b.batch << ": " << b.selected.size() << " picks, mean f "
                 << format_double(b.mean_f) << '\n';
      write_experiment(dir.string(), result);
      const FailureField& field = result.batches.back().field;
      scores = importance_scores(field, c.alpha);
      ranking = field.p;
      evaluated = result.log;
      break;
    }
    case Method::kMc: {
      McScores mc = mc_scores(pool->size(), c.effective_is_seed() ^ 0x6d63ULL);
      scores = std::move(mc.scores);
      ranking = std::move(mc.ranking);
      break;
    }
    case Method::kCe: {
      CeConfig ce;
      ce.batches = c.batches;
      ce.initial = static_cast<std::size_t>(std::ceil(c.initial_budget - 1e-9));
      ce.per_batch = static_cast<std::size_t>(std::ceil(c.batch_budget - 1e-9));
      ce.elites = c.elites;
      CeResult result = run_cross_entropy(*pool, *oracle, ce, c.seed);
      write_ce(dir, result);
      scores = std::move(result.scores);
      ranking = scores.scores;
      evaluated = result.log;
      break;
    }
    case Method::kExternalScores: {
      scores = ScoreVector::from_scores(read_external_scores(c.scores_path, pool->size()));
      ranking = scores.scores;
      break;
    }
  }
  write_scores(dir, "is_scores.csv", scores);

  std::optional<LiveTruth> live;
  if (truth_known) {
    truth.fn = [&truth](std::size_t i) { return (*truth.labels)[i] != 0; };
  } else {
    if (!oracle) oracle = make_oracle(c, pool);
    live.emplace(*oracle, c.gamma, evaluated);
    truth.fn = [&live](std::size_t i) { return (*live)(i); };
  }
  const std::size_t draws =
      draw_count(c.draws, c.draws_multiple, truth_known ? std::optional(truth.failures) : std::nullopt);
  const std::optional<double> p_gamma =
      truth_known ? std::optional(static_cast<double>(truth.failures) / static_cast<double>(pool->size()))
                  : std::nullopt;
  outcome.report = repeated_is_trials(scores, truth.fn, truth_known ? truth.failures : 0, p_gamma, draws,
                                      c.trials, c.effective_is_seed());
  if (!truth_known) outcome.report.recall = outcome.report.se_recall = std::nan("");
  if (truth_known) outcome.curve = retention_recall_curve(ranking, *truth.labels);
  write_reports(dir, outcome);
  progress << "p_hat " << format_double(outcome.report.p_hat_mean) << ", 100RV "
           << format_double(100.0 * outcome.report.relative_variance) << ", recall "
           << format_double(outcome.report.recall) << " (" << draws << " draws x " << c.trials
           << " trials)\n";
  return outcome;
}

std::string splitting_bound_report(double p_gamma, double delta, std::optional<double> target_rv,
                                   std::optional<double> budget) {
  if (target_rv.has_value() == budget.has_value())
    throw InvalidInput("give exactly one of a target relative variance and a budget");
  std::ostringstream out;
  if (target_rv) {
    const SplittingBound b = splitting_bound_for_rv(p_gamma, delta, *target_rv);
    out << "levels K = " << b.levels << '\n'
        << "particles N = " << b.particles << '\n'
        << "min simulations >= " << b.min_simulations << '\n';
  } else {
    const SplittingBound b = splitting_bound_for_budget(p_gamma, delta, *budget);
    std::ostringstream rv;
    rv.setf(std::ios::fixed);
    rv.precision(2);
    rv << 100.0 * b.relative_variance;
    out << "levels K = " << b.levels << '\n'
        << "particles N = " << b.particles << '\n'
        << "relative variance >= " << format_double(b.relative_variance) << '\n'
        << "100RV >= " << rv.str() << '\n';
  }
  return out.str();
}

void generate_synthetic_files(const SyntheticSpec& spec, std::uint64_t noise_seed,
                              const std::string& pool_path, const std::string& values_path) {
  const EmbeddingPool pool = generate_pool(spec);
  {
    auto out = open_out(pool_path);
    write_synthetic_pool_csv(out, pool, spec);
  }
  if (values_path.empty()) return;
  auto out = open_out(values_path);
  out << "point_index,level,f\n";
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t l = 0; l < 2; ++l)
      out << i << ',' << l << ',' << format_double(synthetic_oracle(pool, {i, l}, spec, noise_seed)) << '\n';
}

RunOutcome score_report(const ScoreReportOptions& o) {
  const PoolData data = read_pool_csv(o.truth_path);
  if (!data.truth_f) throw ConfigError(0, o.truth_path + ": no truth_f_level0 column");
  const std::size_t n = data.pool->size();
  const std::vector<char> labels = labels_from_values(*data.truth_f, o.gamma);

  std::ifstream in(o.scores_path);
  if (!in) throw ConfigError(0, "cannot open score file " + o.scores_path);
  std::string header;
  std::getline(in, header);
  const std::string h(trim(header));
  ScoreVector scores;
  std::vector<double> ranking;
  if (h == "point_index,score") {
    in.close();
    ranking = read_external_scores(o.scores_path, n);
    scores = ScoreVector::from_scores(ranking);
  } else if (h == "point_index,p_n,h_n") {
    FailureField field;
    field.p.assign(n, std::nan(""));
    field.h.assign(n, 0.0);
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto fields = split(line, ',');
      try {
        if (fields.size() != 3) throw InvalidInput("expected 3 fields");
        long i = parse_long(fields[0]);
        if (i < 0 || static_cast<std::size_t>(i) >= n) throw InvalidInput("point index outside the pool");
        field.p[i] = parse_double(fields[1]);
        field.h[i] = parse_double(fields[2]);
      } catch (const InvalidInput& e) {
        throw ConfigError(lineno, o.scores_path + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (std::isnan(field.p[i])) throw ConfigError(0, o.scores_path + ": no score for point " + std::to_string(i));
    scores = importance_scores(field, o.alpha);
    ranking = field.p;
  } else {
    throw ConfigError(1, o.scores_path + ": expected header point_index,score or point_index,p_n,h_n");
  }

  std::size_t failures = 0;
  for (char c : labels) failures += c != 0;
  RunOutcome outcome;
  outcome.method = o.method;
  const std::size_t draws = draw_count(o.draws, o.draws_multiple, failures);
  outcome.report = repeated_is_trials(scores, labels, draws, o.trials, o.seed);
  outcome.curve = retention_recall_curve(ranking, labels);
  if (!o.out_dir.empty()) write_reports(o.out_dir, outcome);
  return outcome;
}

}  // namespace rare
