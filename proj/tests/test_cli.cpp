#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "psrplan/cli.hpp"
#include "psrplan/data.hpp"
#include "psrplan/harness.hpp"
#include "psrplan/psr.hpp"

using namespace psrplan;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::stringstream out, err;
  int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("presets command lists every preset") {
  CliRun run = cli({"presets"});
  CHECK(run.status == 0);
  for (const std::string& name : preset_names())
    CHECK(run.out.find(name) != std::string::npos);
}

TEST_CASE("presets --show emits a loadable config") {
  CliRun run = cli({"presets", "--show", "tiger-paper"});
  REQUIRE(run.status == 0);
  std::stringstream in(run.out);
  ExperimentConfig cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse(in));
  CHECK(cfg.env.domain == "tiger");
  CHECK(cfg.episodes == 10000);
}

TEST_CASE("bad invocations exit nonzero with a diagnostic") {
  CHECK(cli({}).status != 0);
  CliRun unknown_cmd = cli({"frobnicate"});
  CHECK(unknown_cmd.status != 0);
  CliRun unknown_flag = cli({"experiment", "--wat"});
  CHECK(unknown_flag.status != 0);
  CHECK(!unknown_flag.err.empty());
  CliRun no_config = cli({"experiment"});
  CHECK(no_config.status != 0);
  CliRun missing_file = cli({"experiment", "--config", "/nonexistent/x.cfg"});
  CHECK(missing_file.status != 0);
  CliRun bad_override = cli({"gen-data", "--preset", "tiger-smoke", "experiment.bogus=1"});
  CHECK(bad_override.status != 0);
}

TEST_CASE("gen-data writes a corpus") {
  TempDir tmp("psrplan_cli_gen");
  CliRun run = cli({"gen-data", "--preset", "tiger-smoke", "--out", tmp.file("corpus.txt"),
                    "data.trajectories=25"});
  REQUIRE(run.status == 0);
  std::ifstream f(tmp.file("corpus.txt"));
  REQUIRE(f.good());
  auto corpus = load_corpus(f);
  CHECK(corpus.size() == 25);
}

TEST_CASE("learn, diagnose, plan round-trip") {
  TempDir tmp("psrplan_cli_learn");
  std::string model_path = tmp.file("model.psr");
  CliRun learn_run = cli({"learn", "--config", "tiger-smoke", "--out", model_path});
  REQUIRE(learn_run.status == 0);

  std::ifstream f(model_path);
  REQUIRE(f.good());
  PsrModel model = load_model(f);
  CHECK(model.rank >= 1);

  CliRun diag = cli({"diagnose", "--config", "tiger-smoke", "--model", model_path});
  CHECK(diag.status == 0);
  CHECK(diag.out.find("one-step L1") != std::string::npos);

  CliRun plan = cli({"plan", "--config", "tiger-smoke", "--model", model_path,
                     "--episodes", "2", "--out", tmp.file("plan")});
  CHECK(plan.status == 0);
  CHECK(fs::exists(tmp.path / "plan" / "episodes.csv"));
}

TEST_CASE("experiment command writes both csv files") {
  TempDir tmp("psrplan_cli_exp");
  CliRun run = cli({"experiment", "--config", "tiger-smoke", "--episodes", "3", "--n-sims", "20",
                    "--method", "random", "--method", "pomcp-true", "--out", tmp.file("out")});
  REQUIRE(run.status == 0);
  std::ifstream ep(tmp.file("out") + "/episodes.csv");
  REQUIRE(ep.good());
  std::string header;
  std::getline(ep, header);
  CHECK(header ==
        "method,domain,n_sims,seed,episode,return_undiscounted,return_discounted,"
        "mean_action_seconds,fallback_count,reset_count");
  int lines = 0;
  std::string line;
  while (std::getline(ep, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 6);  // 2 methods x 3 episodes
  std::ifstream sum(tmp.file("out") + "/summary.csv");
  REQUIRE(sum.good());
  std::getline(sum, header);
  CHECK(header == "method,domain,n_sims,episodes,mean_return,stderr_return,mean_action_seconds");
}

TEST_CASE("config file with overrides drives the pipeline") {
  TempDir tmp("psrplan_cli_cfg");
  {
    std::ofstream f(tmp.file("exp.cfg"));
    preset("tiger-smoke").to_key_values().serialize(f);
  }
  CliRun run = cli({"experiment", "--config", tmp.file("exp.cfg"), "--episodes", "2",
                    "--method", "random", "--out", tmp.file("out"), "experiment.seed=9"});
  CHECK(run.status == 0);
  CHECK(fs::exists(tmp.path / "out" / "summary.csv"));
}
