#include "doctest.h"

#include "arbor/experiments.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace arbor;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const ResultRow& find_row(const ResultTable& t, const std::string& quantity, const std::string& first_key = "") {
  for (const auto& r : t.rows)
    if (r.quantity == quantity && (first_key.empty() || r.keys.front() == first_key)) return r;
  FAIL("row not found: " << quantity);
  throw std::logic_error("unreachable");
}

std::size_t config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

std::string config_error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ARBOR_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("an experiment name alone gives the documented defaults") {
  const auto cfg = parse_config("experiment = mw-check\n");
  ExperimentConfig expected;
  expected.experiment = "mw-check";
  CHECK(cfg == expected);
  CHECK(cfg.graph == "default");
  CHECK(cfg.seed == 1);
  CHECK_FALSE(cfg.sweeps.has_value());
  CHECK(parse_config("", true) == ExperimentConfig{});
}

TEST_CASE("config parsing: comments, lists and whitespace") {
  const auto cfg = parse_config(
      "# header comment\n"
      "experiment = decay-2d   # trailing comment\n"
      "\n"
      "  L = 8, 16 ,32\n"
      "beta = 0.5,2\n"
      "sigmas=2.5\n"
      "seed = 18446744073709551615\n");
  CHECK(cfg.experiment == "decay-2d");
  CHECK(*cfg.L == std::vector<std::uint64_t>{8, 16, 32});
  CHECK(*cfg.beta == std::vector<double>{0.5, 2.0});
  CHECK(*cfg.sigmas == 2.5);
  CHECK(cfg.seed == 18446744073709551615ull);
}

TEST_CASE("config errors name the line and the key") {
  CHECK(config_error_line("sweeps = -1\nexperiment = x\n") == 1);
  CHECK(config_error_message("sweeps = -1\n").find("sweeps") != std::string::npos);
  CHECK(config_error_line("experiment = a\nsweeps = 10\nsweeps = 20\n") == 3);
  CHECK(config_error_message("experiment = a\nsweeps = 10\nsweeps = 20\n").find("duplicate key 'sweeps'") !=
        std::string::npos);
  CHECK(config_error_message("experiment = a\nsweps = 1\n").find("unknown key 'sweps'") != std::string::npos);
  CHECK(config_error_line("experiment = a\nbeta = 1,,2\n") == 2);
  CHECK(config_error_line("experiment = a\nbeta = nan\n") == 2);
  CHECK(config_error_line("experiment = a\nsigmas = 1e999\n") == 2);
  CHECK(config_error_line("experiment = a\nsweeps 10\n") == 2);
  CHECK(config_error_line("experiment = a\nsweeps = 10x\n") == 2);
  CHECK(config_error_line("experiment =\n") == 1);
  // A missing experiment is reported after the last line.
  CHECK(config_error_line("sweeps = 10\n\n") == 3);
}

TEST_CASE("emit_config round-trips every field") {
  ExperimentConfig cfg;
  cfg.experiment = "horo-sample";
  cfg.graph = "inline:3 2; 0 1 1; 1 2 0.5";
  cfg.beta = std::vector<double>{0.1, 1.0 / 3.0};
  cfg.alpha = std::vector<double>{4};
  cfg.h = std::vector<double>{1e-300};
  cfg.L = std::vector<std::uint64_t>{3, 8};
  cfg.d = 2;
  cfg.N = std::vector<std::uint64_t>{7};
  cfg.r = std::vector<std::uint64_t>{1, 2};
  cfg.sweeps = 100;
  cfg.burn_in = 10;
  cfg.steps = 0;
  cfg.mala_burn_in = 5;
  cfg.chains = 3;
  cfg.seed = 99;
  cfg.max_vertices = 4;
  cfg.draws = 2;
  cfg.forms = 1;
  cfg.sigmas = 3;
  cfg.max_stderr = 0.005;
  cfg.tol_exact_rel = 1e-8;
  cfg.tol_subcritical_rel = 0.02;
  cfg.tol_supercritical_abs = 0.01;
  cfg.tol_critical_rel = 0.02;
  cfg.out = "some dir";
  const auto text = emit_config(cfg);
  CHECK(parse_config(text) == cfg);
  CHECK(emit_config(parse_config(text)) == text);
}

TEST_CASE("unknown experiments and rejected graphs are configuration errors") {
  ExperimentConfig cfg;
  cfg.experiment = "no-such-experiment";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  cfg.experiment = "decay-2d";
  cfg.graph = "complete";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  cfg.graph = "petersen";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  cfg.experiment = "mw-check";
  cfg.graph = "default";
  cfg.L = std::vector<std::uint64_t>{3, 4};
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("every catalogued experiment has help text and a distinct criterion set") {
  std::set<int> seen;
  for (const auto& e : experiment_catalog()) {
    CHECK_FALSE(e.summary.empty());
    CHECK(experiment_help().find(e.name) != std::string::npos);
    for (int c : e.criteria) CHECK(seen.insert(c).second);
  }
  CHECK(seen.size() == 14);
  CHECK(*seen.begin() == 1);
  CHECK(*seen.rbegin() == 14);
}

TEST_CASE("exact-audit on an inline triangle: rooted forests of K3 with unit field") {
  ExperimentConfig cfg;
  cfg.experiment = "exact-audit";
  cfg.graph = "inline:3 3;0 1 1;1 2 1;0 2 1";
  const auto t = run_experiment(cfg);
  // det(L_K3 + I) = 1 * 4 * 4.
  CHECK(find_row(t, "fgff_expectation_one").value == "16");
  CHECK(find_row(t, "rooted_forest_sum").value == "16");
  // Forest weights on K3: 1 + 3 + 3; P[e, f] = 1/7, P[e] = 3/7.
  CHECK(find_row(t, "na_deficit_max").value == "-2/49");
  CHECK(t.all_pass());
  CHECK(t.criteria() == std::vector<int>{13, 14});
}

TEST_CASE("small smoke runs of every experiment pass their checks") {
  auto run = [](const std::string& text) {
    auto t = run_experiment(parse_config(text));
    INFO(to_csv(t));
    CHECK(t.all_pass());
    CHECK(t.n_checked() > 0);
    return t;
  };
  run("experiment = exact-audit\nmax_vertices = 3\ndraws = 1\n");
  run("experiment = grassmann-audit\nmax_vertices = 3\ndraws = 1\nforms = 4\n");
  const auto mf = run("experiment = meanfield-sweep\nN = 3, 10000\nalpha = 0.5, 2\n");
  CHECK(mf.criteria() == std::vector<int>{4, 5, 6});
  const auto crit = run("experiment = mf-critical\nN = 1000000\n");
  CHECK(crit.criterion_pass(7));
  run("experiment = forest-sample\nL = 2\nsweeps = 40000\nburn_in = 100\nsteps = 20000\nmala_burn_in = 2000\n"
      "max_stderr = 0.05\n");
  run("experiment = horo-sample\nL = 2\nsteps = 4000\nmala_burn_in = 1000\nsigmas = 4\n");
  run("experiment = mw-check\nbeta = 1\nh = 1\n");
  run("experiment = decay-2d\nL = 16\nr = 1, 4\nsweeps = 3000\nburn_in = 500\n");
  run("experiment = density-2d\nL = 4, 16\nsweeps = 3000\nburn_in = 300\n");
}

TEST_CASE("identical seeds give byte-identical CSV") {
  const auto cfg = parse_config("experiment = forest-sample\nL = 2\nsweeps = 2000\nburn_in = 100\nsteps = 2000\n"
                                "mala_burn_in = 500\nseed = 5\n");
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  CHECK(to_csv(a) == to_csv(b));
  auto other = cfg;
  other.seed = 6;
  CHECK(to_csv(run_experiment(other)) != to_csv(a));
  CHECK(to_csv(a).find("# seed: 5") != std::string::npos);
}

TEST_CASE("write_outputs produces csv, json, plot data and attachments") {
  const auto dir = std::filesystem::temp_directory_path() / "arbor_runner_outputs";
  std::filesystem::remove_all(dir);
  const auto t = run_experiment(parse_config("experiment = meanfield-sweep\nN = 2, 100\nalpha = 2\n"));
  const auto written = write_outputs(t, dir.string());
  CHECK(written.size() == 4);
  const auto csv = slurp(dir / "meanfield-sweep.csv");
  CHECK(csv.starts_with("# experiment: meanfield-sweep\n# version: 1.0.0\n# seed: 1\n"));
  CHECK(csv.find("N,alpha,quantity,value,stderr,reference,tolerance,pass,criterion,note\n") != std::string::npos);
  const auto json = slurp(dir / "meanfield-sweep.json");
  CHECK(json.find("\"wall_seconds\"") != std::string::npos);
  CHECK(json.find("\"all_pass\": true") != std::string::npos);
  CHECK(slurp(dir / "meanfield-sweep_sweep.csv").starts_with("N,alpha,Z_quad,Z_asym,P_quad,P_asym,Z_ratio,P_ratio\n"));
  CHECK(slurp(dir / "meanfield-sweep_connect.dat").starts_with("# N alpha N_P_quad P_quad P_asym\n"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("command-line exit codes: 0 pass, 1 usage or config error, 2 failed check") {
  const auto dir = std::filesystem::temp_directory_path() / "arbor_runner_cli";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto out = " --out " + (dir / "out").string();
  CHECK(run_cli("--experiment mw-check" + out) == 0);
  CHECK(run_cli("--experiment nope" + out) == 1);
  CHECK(run_cli("--bogus-flag") == 1);
  std::ofstream(dir / "bad.cfg") << "experiment = mw-check\nsweeps = -1\n";
  CHECK(run_cli("--config " + (dir / "bad.cfg").string() + out) == 1);
  // An unattainable tolerance makes a check fail.
  std::ofstream(dir / "strict.cfg") << "experiment = meanfield-sweep\nN = 100000\nalpha = 0.5\n"
                                       "tol_subcritical_rel = 1e-9\n";
  CHECK(run_cli("--config " + (dir / "strict.cfg").string() + out) == 2);
  CHECK(std::filesystem::exists(dir / "out" / "meanfield-sweep.csv"));
  CHECK(run_cli("--help") == 0);
  std::filesystem::remove_all(dir);
}
