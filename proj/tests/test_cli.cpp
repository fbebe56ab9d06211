#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rare/commands.hpp"
#include "rare/config.hpp"
#include "rare/errors.hpp"
#include "rare/oracle.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("rare_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string script(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::path p = dir / name;
  std::ofstream(p) << "#!/bin/bash\n" << body << '\n';
  fs::permissions(p, fs::perms::owner_all);
  return p.string();
}

int config_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    rare::parse_experiment_config(in);
  } catch (const rare::ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

rare::ExperimentConfig small_synthetic(const std::string& method) {
  std::istringstream in(
      "[pool]\nkind = synthetic\nn = 3000\n"
      "[method]\nname = " + method + "\n"
      "[budget]\ninitial = 10\nbatch = 5\nbatches = 3\n"
      "[gp]\niterations = 60\n"
      "[is]\ndraws_multiple = 2\ntrials = 100\n"
      "[seeds]\nroot = 3\n");
  return rare::parse_experiment_config(in);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config defaults") {
  std::istringstream in("# defaults only\n[pool]\nkind = synthetic\n");
  auto c = rare::parse_experiment_config(in);
  CHECK(c.method == rare::Method::kBams);
  CHECK(c.clusters == 6);
  CHECK(c.alpha == 2.5);
  CHECK(c.draws_multiple == 5.0);
  CHECK(c.trials == 200);
  CHECK(c.fidelity.costs == std::vector<double>{1.0, 0.1});
  CHECK(c.gamma == 0.56);
  auto rc = c.run_config();
  CHECK(rc.fidelity.levels() == 2);
  CHECK(rc.acquisition == rare::AcquisitionKind::kVarianceBound);
  c.method = rare::Method::kBas;
  CHECK(c.run_config().fidelity.levels() == 1);
  c.method = rare::Method::kMcmGp;
  CHECK(c.run_config().acquisition == rare::AcquisitionKind::kRandom);
  CHECK(c.run_config().fidelity.levels() == 2);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error_line("[pool]\nkind = synthetic\n[fidelity]\ncosts = 0.9, 0.1\n") == 4);
  CHECK(config_error_line("[fidelity]\ncosts = 1, 1.5\n") == 2);
  CHECK(config_error_line("[fidelity]\ncosts = 1, 0\n") == 2);
  CHECK(config_error_line("[fidelity]\n\ncosts = 1, 1\n") == 3);
  CHECK(config_error_line("[pool]\nkind = synthetic\nflavour = x\n") == 3);
  CHECK(config_error_line("[colors]\n") == 1);
  CHECK(config_error_line("kind = synthetic\n") == 1);
  CHECK(config_error_line("[method]\nname = magic\n") == 2);
  CHECK(config_error_line("[budget]\nbatch = -1\n") == 2);
  CHECK(config_error_line("[budget]\nbatches = two\n") == 2);
  CHECK(config_error_line("[seeds]\nroot = 1\nroot = 2\n") == 3);
  CHECK(config_error_line("[method]\neta = 0.5\n") == 2);
  CHECK(config_error_line("[pool]\nkind = csv\npath = p.csv\n") == 0);  // gamma missing
  CHECK(config_error_line("[pool]\nkind = synthetic\n") == -1);
}

TEST_CASE("external oracle protocol") {
  auto dir = scratch("oracle");
  rare::ExternalOracle ok({script(dir, "ok.sh", "while read cmd i l; do echo \"OK $i.$l\"; done")});
  CHECK(ok.evaluate({12, 1}) == doctest::Approx(12.1));
  CHECK(ok.evaluate({3, 0}) == doctest::Approx(3.0));

  rare::ExternalOracle err({script(dir, "err.sh", "while read a b c; do echo \"ERR boom\"; done")});
  try {
    err.evaluate({1, 0});
    FAIL("expected an oracle error");
  } catch (const rare::OracleTimeout&) {
    FAIL("wrong error type");
  } catch (const rare::OracleProtocolError&) {
    FAIL("wrong error type");
  } catch (const rare::OracleExited&) {
    FAIL("wrong error type");
  } catch (const rare::OracleError& e) {
    CHECK(std::string(e.what()) == "boom");
  }

  rare::ExternalOracle bad({script(dir, "bad.sh", "read a; echo HELLO; sleep 1")});
  CHECK_THROWS_AS(bad.evaluate({1, 0}), rare::OracleProtocolError);

  rare::ExternalOracle dies({script(dir, "dies.sh", "read a; exit 3")});
  CHECK_THROWS_AS(dies.evaluate({1, 0}), rare::OracleExited);

  rare::ExternalOracle slow({script(dir, "slow.sh", "read a; sleep 5")}, std::chrono::milliseconds(200));
  auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(slow.evaluate({1, 0}), rare::OracleTimeout);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(4));

  CHECK(rare::split_command("a 'b c' \"d e\" f") == std::vector<std::string>{"a", "b c", "d e", "f"});
  fs::remove_all(dir);
}

TEST_CASE("csv oracle") {
  auto dir = scratch("csv");
  std::ofstream(dir / "v.csv") << "point_index,level,f\n0,0,1.5\n0,1,1.25\n";
  auto o = rare::CsvOracle::load((dir / "v.csv").string());
  CHECK(o.evaluate({0, 1}) == 1.25);
  CHECK_THROWS_AS(o.evaluate({1, 0}), rare::OracleError);
  std::ofstream(dir / "w.csv") << "point_index,level,f\n0,0,x\n";
  try {
    rare::CsvOracle::load((dir / "w.csv").string());
    FAIL("expected a config error");
  } catch (const rare::ConfigError& e) {
    CHECK(e.line() == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("splitting-bound report") {
  CHECK(rare::splitting_bound_report(0.01, 0.1, 0.00851, std::nullopt) ==
        "levels K = 43\nparticles N = 561\nmin simulations >= 2973\n");
  CHECK(rare::splitting_bound_report(0.01, 0.1, std::nullopt, 2296.0).find("100RV >= 1.10\n") != std::string::npos);
  CHECK_THROWS_AS(rare::splitting_bound_report(0.01, 0.1, std::nullopt, std::nullopt), rare::InvalidInput);
}

TEST_CASE("synthetic runs write every artifact and rerun identically") {
  auto dir = scratch("run");
  std::ostringstream progress;
  auto bams = rare::run_configured(small_synthetic("bams"), (dir / "bams").string(), progress);
  for (const char* f : {"log.csv", "scores_batch3.csv", "selected_batch2.csv", "hyperparams_batch3.txt",
                        "rate_report.csv", "retention_recall.csv", "is_scores.csv"})
    CHECK(fs::exists(dir / "bams" / f));
  auto mc = rare::run_configured(small_synthetic("mc"), (dir / "mc").string(), progress);
  CHECK(mc.report.relative_variance > bams.report.relative_variance);

  auto cfg = small_synthetic("mcm-gp");
  cfg.seed = 7;
  rare::run_configured(cfg, (dir / "a").string(), progress);
  rare::run_configured(cfg, (dir / "b").string(), progress);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    ++compared;
  }
  CHECK(compared >= 10);
  fs::remove_all(dir);
}

TEST_CASE("csv pool with an external oracle") {
  auto dir = scratch("external");
  rare::SyntheticSpec spec;
  spec.n = 400;
  spec.seed = 2;
  rare::generate_synthetic_files(spec, 5, (dir / "pool.csv").string(), (dir / "values.csv").string());
  auto pool = rare::read_pool_csv((dir / "pool.csv").string());
  CHECK(pool.pool->size() == 400);
  CHECK(pool.truth_f.has_value());
  const std::string oracle = script(
      dir, "oracle.sh",
      "declare -A v\n"
      "while IFS=, read -r i l f; do v[\"$i $l\"]=$f; done < \"$1\"\n"
      "while read -r cmd i l; do echo \"OK ${v[\"$i $l\"]}\"; done\n");
  std::ofstream(dir / "run.ini") << "[pool]\nkind = csv\npath = " << (dir / "pool.csv").string()
                                 << "\n[fidelity]\ncosts = 1, 0.1\n"
                                 << "[oracle]\nkind = external\ncommand = " << oracle << ' '
                                 << (dir / "values.csv").string() << "\ntimeout_s = 30\n"
                                 << "[method]\nname = mcm-gp\n[budget]\ninitial = 6\nbatch = 3\nbatches = 2\n"
                                 << "[gp]\niterations = 20\n[is]\ngamma = 1.2\ntrials = 20\n";
  auto c = rare::load_experiment_config((dir / "run.ini").string());
  std::ostringstream progress;
  auto out = rare::run_configured(c, (dir / "out").string(), progress);
  CHECK(out.curve.size() == 20);
  std::ifstream log(dir / "out" / "log.csv");
  std::string header, first;
  std::getline(log, header);
  std::getline(log, first);
  CHECK(header == "point_index,level,f,batch");
  CHECK_FALSE(first.empty());

  rare::ScoreReportOptions ro;
  ro.scores_path = (dir / "out" / "scores_batch2.csv").string();
  ro.truth_path = (dir / "pool.csv").string();
  ro.gamma = 1.2;
  ro.trials = 20;
  auto rep = rare::score_report(ro);
  CHECK(rep.report.trials == 20);
  CHECK(rep.curve.size() == 20);
  fs::remove_all(dir);
}

}
