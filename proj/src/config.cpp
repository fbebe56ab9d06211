#include "rare/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {

namespace {

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"pool", {"kind", "path", "n", "center", "noise_std"}},
      {"fidelity", {"costs"}},
      {"oracle", {"kind", "path", "command", "timeout_s"}},
      {"method", {"name", "scores", "eta", "clusters", "clusters_initial", "merge", "strict_budget",
                  "elites"}},
      {"budget", {"initial", "batch", "batches"}},
      {"gp", {"learning_rate", "iterations", "min_log", "max_log"}},
      {"is", {"gamma", "alpha", "draws", "draws_multiple", "trials"}},
      {"seeds", {"root", "pool", "noise", "is"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

  const ConfigValue* get(const std::string& section, const std::string& key) const {
    return doc_.find(section, key);
  }

  template <class F>
  auto convert(const ConfigValue& v, F&& f) const {
    try {
      return f(v.text);
    } catch (const InvalidInput& e) {
      throw ConfigError(v.line, e.what());
    }
  }

  void real(const std::string& section, const std::string& key, double& out) const {
    if (const auto* v = get(section, key)) out = convert(*v, [](const std::string& t) { return parse_double(t); });
  }

  void count(const std::string& section, const std::string& key, std::size_t& out) const {
    if (const auto* v = get(section, key)) out = non_negative(*v);
  }

  void integer(const std::string& section, const std::string& key, int& out) const {
    if (const auto* v = get(section, key)) out = static_cast<int>(non_negative(*v));
  }

  void seed(const std::string& section, const std::string& key, std::uint64_t& out) const {
    if (const auto* v = get(section, key)) out = unsigned_value(*v);
  }

  void seed(const std::string& section, const std::string& key,
            std::optional<std::uint64_t>& out) const {
    if (const auto* v = get(section, key)) out = unsigned_value(*v);
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    const auto* v = get(section, key);
    if (!v) return;
    if (v->text == "true" || v->text == "1" || v->text == "yes") {
      out = true;
    } else if (v->text == "false" || v->text == "0" || v->text == "no") {
      out = false;
    } else {
      throw ConfigError(v->line, key + ": expected true or false, got '" + v->text + "'");
    }
  }

  std::size_t non_negative(const ConfigValue& v) const {
    long x = convert(v, [](const std::string& t) { return parse_long(t); });
    if (x < 0) throw ConfigError(v.line, "expected a non-negative integer, got '" + v.text + "'");
    return static_cast<std::size_t>(x);
  }

  static std::uint64_t unsigned_value(const ConfigValue& v) {
    std::uint64_t x = 0;
    const auto* end = v.text.data() + v.text.size();
    auto [ptr, ec] = std::from_chars(v.text.data(), end, x);
    if (ec != std::errc() || ptr != end || v.text.empty())
      throw ConfigError(v.line, "expected an unsigned integer, got '" + v.text + "'");
    return x;
  }

 private:
  const ConfigDocument& doc_;
};

int line_of(const Reader& r, const std::string& section, const std::string& key) {
  const auto* v = r.get(section, key);
  return v ? v->line : 0;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::istream& in) {
  ConfigDocument doc;
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (auto pos = s.find_first_of("#;"); pos != std::string_view::npos) s = s.substr(0, pos);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "unterminated section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      if (section.empty()) throw ConfigError(line, "empty section name");
      if (doc.section_lines_.count(section)) throw ConfigError(line, "duplicate section [" + section + "]");
      doc.section_lines_[section] = line;
      doc.sections_[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, "expected 'key = value'");
    std::string key(trim(s.substr(0, eq)));
    std::string value(trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError(line, "missing key");
    if (value.empty()) throw ConfigError(line, "missing value for '" + key + "'");
    if (section.empty()) throw ConfigError(line, "key '" + key + "' outside of any section");
    auto& keys = doc.sections_[section];
    if (keys.count(key)) throw ConfigError(line, "duplicate key '" + key + "' in [" + section + "]");
    keys[key] = {value, line};
  }
  return doc;
}

const ConfigValue* ConfigDocument::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void ConfigDocument::check_schema(const std::map<std::string, std::vector<std::string>>& schema) const {
  for (const auto& [name, keys] : sections_) {
    auto allowed = schema.find(name);
    if (allowed == schema.end()) throw ConfigError(section_lines_.at(name), "unknown section [" + name + "]");
    for (const auto& [key, value] : keys) {
      bool ok = false;
      for (const auto& a : allowed->second) ok = ok || a == key;
      if (!ok) throw ConfigError(value.line, "unknown key '" + key + "' in [" + name + "]");
    }
  }
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kBams: return "bams";
    case Method::kBas: return "bas";
    case Method::kMc: return "mc";
    case Method::kMcGp: return "mc-gp";
    case Method::kMcmGp: return "mcm-gp";
    case Method::kCe: return "ce";
    case Method::kExternalScores: return "external-scores";
  }
  return "unknown";
}

std::uint64_t ExperimentConfig::effective_noise_seed() const {
  return noise_seed.value_or(splitmix64(seed ^ 0x6e6f697365ULL));
}

std::uint64_t ExperimentConfig::effective_is_seed() const {
  return is_seed.value_or(splitmix64(seed ^ 0x69735f7472ULL));
}

RunConfig ExperimentConfig::run_config() const {
  RunConfig rc;
  rc.initial_budget = initial_budget;
  rc.batch_budget = batch_budget;
  rc.batches = batches;
  rc.clusters = clusters;
  rc.clusters_initial = clusters_initial;
  rc.eta = eta;
  rc.gamma = gamma;
  rc.fidelity = fidelity;
  if (method == Method::kBas || method == Method::kMcGp) rc.fidelity = FidelityConfig::single();
  rc.train = train;
  rc.acquisition = (method == Method::kMcGp || method == Method::kMcmGp) ? AcquisitionKind::kRandom
                                                                         : AcquisitionKind::kVarianceBound;
  rc.merge_cost_normalized = merge_cost_normalized;
  rc.strict_budget = strict_budget;
  rc.seed = seed;
  return rc;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  const ConfigDocument doc = ConfigDocument::parse(in);
  doc.check_schema(schema());
  const Reader r(doc);
  ExperimentConfig c;

  if (const auto* v = r.get("pool", "kind")) {
    if (v->text == "synthetic") c.pool_kind = PoolKind::kSynthetic;
    else if (v->text == "csv") c.pool_kind = PoolKind::kCsv;
    else throw ConfigError(v->line, "pool kind must be synthetic or csv, got '" + v->text + "'");
  }
  if (const auto* v = r.get("pool", "path")) c.pool_path = v->text;
  if (c.pool_kind == PoolKind::kCsv && c.pool_path.empty())
    throw ConfigError(line_of(r, "pool", "kind"), "csv pool needs a path");
  r.count("pool", "n", c.synthetic.n);
  r.real("pool", "center", c.synthetic.center);
  r.real("pool", "noise_std", c.synthetic.noise_std);
  if (c.synthetic.n == 0) throw ConfigError(line_of(r, "pool", "n"), "pool size must be positive");
  if (!(c.synthetic.noise_std >= 0.0))
    throw ConfigError(line_of(r, "pool", "noise_std"), "noise_std must be non-negative");

  // Synthetic runs default to the benchmark's cheap level; otherwise one level.
  if (c.pool_kind == PoolKind::kSynthetic) c.fidelity.costs = {1.0, c.synthetic.level1_cost};
  if (const auto* v = r.get("fidelity", "costs")) {
    c.fidelity.costs.clear();
    for (const auto& part : split(v->text, ','))
      c.fidelity.costs.push_back(r.convert(*v, [&](const std::string&) { return parse_double(part); }));
    if (c.fidelity.costs.empty()) throw ConfigError(v->line, "costs list is empty");
    if (c.fidelity.costs[0] != 1.0) throw ConfigError(v->line, "level-0 cost must be exactly 1");
    for (std::size_t l = 1; l < c.fidelity.costs.size(); ++l) {
      const double cl = c.fidelity.costs[l];
      if (!(cl > 0.0 && cl <= 1.0))
        throw ConfigError(v->line, "cost of level " + std::to_string(l) + " must lie in (0, 1]");
      if (cl == 1.0)
        throw ConfigError(v->line, "cost of level " + std::to_string(l) + " must be below the level-0 cost");
    }
  }
  if (c.pool_kind == PoolKind::kSynthetic && c.fidelity.levels() > 1)
    c.synthetic.level1_cost = c.fidelity.costs[1];

  if (const auto* v = r.get("oracle", "kind")) {
    if (v->text == "synthetic") c.oracle_kind = OracleKind::kSynthetic;
    else if (v->text == "csv") c.oracle_kind = OracleKind::kCsv;
    else if (v->text == "external") c.oracle_kind = OracleKind::kExternal;
    else throw ConfigError(v->line, "oracle kind must be synthetic, csv or external, got '" + v->text + "'");
  } else if (c.pool_kind == PoolKind::kCsv) {
    c.oracle_kind = OracleKind::kCsv;
  }
  if (const auto* v = r.get("oracle", "path")) c.oracle_path = v->text;
  if (const auto* v = r.get("oracle", "command")) c.oracle_command = v->text;
  r.real("oracle", "timeout_s", c.oracle_timeout_s);
  const int oracle_line = line_of(r, "oracle", "kind");
  if (c.oracle_kind == OracleKind::kSynthetic && c.pool_kind != PoolKind::kSynthetic)
    throw ConfigError(oracle_line, "synthetic oracle requires a synthetic pool");
  if (c.oracle_kind == OracleKind::kSynthetic && c.fidelity.levels() > 2)
    throw ConfigError(line_of(r, "fidelity", "costs"), "synthetic oracle has two levels");
  if (c.oracle_kind == OracleKind::kCsv && c.oracle_path.empty())
    throw ConfigError(oracle_line, "csv oracle needs a path");
  if (c.oracle_kind == OracleKind::kExternal && c.oracle_command.empty())
    throw ConfigError(oracle_line, "external oracle needs a command");
  if (!(c.oracle_timeout_s > 0.0))
    throw ConfigError(line_of(r, "oracle", "timeout_s"), "timeout must be positive");

  if (const auto* v = r.get("method", "name")) {
    static const std::map<std::string, Method> names{
        {"bams", Method::kBams}, {"bas", Method::kBas},       {"mc", Method::kMc},
        {"mc-gp", Method::kMcGp}, {"mcm-gp", Method::kMcmGp}, {"ce", Method::kCe},
        {"external-scores", Method::kExternalScores}};
    auto it = names.find(v->text);
    if (it == names.end()) throw ConfigError(v->line, "unknown method '" + v->text + "'");
    c.method = it->second;
  }
  if (const auto* v = r.get("method", "scores")) c.scores_path = v->text;
  if (c.method == Method::kExternalScores && c.scores_path.empty())
    throw ConfigError(line_of(r, "method", "name"), "external-scores needs a scores path");
  r.real("method", "eta", c.eta);
  r.count("method", "clusters", c.clusters);
  r.count("method", "clusters_initial", c.clusters_initial);
  if (const auto* v = r.get("method", "merge")) {
    if (v->text == "cost-normalized") c.merge_cost_normalized = true;
    else if (v->text == "raw") c.merge_cost_normalized = false;
    else throw ConfigError(v->line, "merge must be cost-normalized or raw");
  }
  r.flag("method", "strict_budget", c.strict_budget);
  r.count("method", "elites", c.elites);
  if (!(c.eta >= 1.0)) throw ConfigError(line_of(r, "method", "eta"), "eta must be >= 1");
  if (c.clusters < 1) throw ConfigError(line_of(r, "method", "clusters"), "at least one cluster is required");
  if (c.clusters_initial != 0 && c.clusters_initial < c.clusters)
    throw ConfigError(line_of(r, "method", "clusters_initial"), "clusters_initial must be >= clusters");
  if (c.elites < 1) throw ConfigError(line_of(r, "method", "elites"), "elites must be positive");

  r.real("budget", "initial", c.initial_budget);
  r.real("budget", "batch", c.batch_budget);
  r.integer("budget", "batches", c.batches);
  if (!(c.initial_budget > 0.0)) throw ConfigError(line_of(r, "budget", "initial"), "initial budget must be positive");
  if (!(c.batch_budget > 0.0)) throw ConfigError(line_of(r, "budget", "batch"), "batch budget must be positive");
  if (c.batches < 1) throw ConfigError(line_of(r, "budget", "batches"), "at least one batch is required");

  r.real("gp", "learning_rate", c.train.learning_rate);
  r.integer("gp", "iterations", c.train.iterations);
  r.real("gp", "min_log", c.train.min_log);
  r.real("gp", "max_log", c.train.max_log);
  if (!(c.train.learning_rate > 0.0))
    throw ConfigError(line_of(r, "gp", "learning_rate"), "learning_rate must be positive");
  if (!(c.train.min_log < c.train.max_log))
    throw ConfigError(line_of(r, "gp", "min_log"), "min_log must be below max_log");

  if (c.pool_kind != PoolKind::kSynthetic && !r.get("is", "gamma"))
    throw ConfigError(0, "[is] gamma is required unless the pool is synthetic");
  r.real("is", "gamma", c.gamma);
  c.synthetic.gamma = c.gamma;
  r.real("is", "alpha", c.alpha);
  if (const auto* v = r.get("is", "draws")) c.draws = r.non_negative(*v);
  r.real("is", "draws_multiple", c.draws_multiple);
  r.count("is", "trials", c.trials);
  if (!std::isfinite(c.gamma)) throw ConfigError(line_of(r, "is", "gamma"), "gamma must be finite");
  if (!(c.alpha >= 0.0)) throw ConfigError(line_of(r, "is", "alpha"), "alpha must be non-negative");
  if (c.draws && *c.draws == 0) throw ConfigError(line_of(r, "is", "draws"), "draws must be positive");
  if (!(c.draws_multiple > 0.0))
    throw ConfigError(line_of(r, "is", "draws_multiple"), "draws_multiple must be positive");
  if (c.trials < 2) throw ConfigError(line_of(r, "is", "trials"), "at least two trials are required");

  r.seed("seeds", "root", c.seed);
  r.seed("seeds", "pool", c.pool_seed);
  r.seed("seeds", "noise", c.noise_seed);
  r.seed("seeds", "is", c.is_seed);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path);
  return parse_experiment_config(in);
}

}  // namespace rare
