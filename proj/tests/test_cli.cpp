#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "util/csv.hpp"

using namespace pidmrl;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"pidmrl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

const std::string kRoot = "test_cli_out";

struct Cleanup {
  Cleanup() { fs::remove_all(kRoot); }
  ~Cleanup() { fs::remove_all(kRoot); }
};

std::vector<std::string> micro_explore(const std::string& out,
                                       const std::string& seed) {
  return {"explore", "--out", out, "--seed", seed,
          "--explore.iters", "3", "--explore.num-envs", "2",
          "--explore.ensemble-size", "2", "--ppo.t-steps", "8",
          "--ppo.epochs", "1", "--ppo.minibatches", "1"};
}

}  // namespace

TEST_CASE("cli smoke: full micro pipeline end to end") {
  Cleanup guard;

  // Bad invocations exit with the config error code.
  CHECK(run({"explore", "--no-such-flag"}) == 2);
  CHECK(run({"pretrain", "--out", kRoot + "/nope"}) == 2);  // --data missing
  CHECK(run({"train", "--task", "nope", "--out", kRoot + "/nope"}) == 2);
  CHECK(run({"train", "--task", "reach", "--init", "pretrained-both",
             "--out", kRoot + "/nope"}) == 2);  // checkpoint required

  // Exploration runs and is byte-deterministic per seed.
  REQUIRE(run(micro_explore(kRoot + "/ex1", "5")) == 0);
  REQUIRE(run(micro_explore(kRoot + "/ex2", "5")) == 0);
  for (const std::string f :
       {"config.toml", "dataset.bin", "explore_log.csv", "status.json"})
    CHECK(fs::exists(kRoot + "/ex1/" + f));
  CHECK(slurp(kRoot + "/ex1/dataset.bin") == slurp(kRoot + "/ex2/dataset.bin"));

  // Never mutates an existing run directory.
  CHECK(run(micro_explore(kRoot + "/ex1", "5")) == 2);

  // Pretraining on the collected dataset.
  REQUIRE(run({"pretrain", "--data", kRoot + "/ex1/dataset.bin", "--out",
               kRoot + "/pre", "--seed", "1", "--pidm.epochs", "2",
               "--pidm.batch-size", "2"}) == 0);
  CHECK(fs::exists(kRoot + "/pre/pidm.ckpt"));
  CHECK(fs::exists(kRoot + "/pre/pretrain_curve.csv"));
  CHECK(fs::exists(kRoot + "/pre/pidm_eval.csv"));

  // Source tag validation.
  CHECK(run({"pretrain", "--data", kRoot + "/ex1/dataset.bin",
             "--data-source", "rl-early", "--out", kRoot + "/pre2"}) == 2);

  // Training: one random-init run and one warm-started run.
  const std::vector<std::string> train_common = {
      "--ppo.iters", "4", "--ppo.t-steps", "8", "--ppo.num-envs", "2",
      "--ppo.epochs", "1", "--ppo.minibatches", "1", "--seed", "3",
      "--record-early", "4"};
  std::vector<std::string> t1 = {"train", "--task", "reach", "--init",
                                 "random-pidm", "--out", kRoot + "/run_rnd"};
  t1.insert(t1.end(), train_common.begin(), train_common.end());
  REQUIRE(run(t1) == 0);
  for (const std::string f : {"config.toml", "curve.csv",
                              "weight_updates.csv", "status.json",
                              "final.ckpt", "early_dataset.bin"})
    CHECK(fs::exists(kRoot + "/run_rnd/" + f));

  std::vector<std::string> t2 = {"train",  "--task", "reach",
                                 "--init", "pretrained-both",
                                 "--pidm", kRoot + "/pre/pidm.ckpt",
                                 "--out",  kRoot + "/run_pre"};
  t2.insert(t2.end(), train_common.begin(), train_common.end());
  REQUIRE(run(t2) == 0);

  // The early-RL dataset feeds pretraining through the data-source flag.
  REQUIRE(run({"pretrain", "--data", kRoot + "/run_rnd/early_dataset.bin",
               "--data-source", "rl-early", "--out", kRoot + "/pre_early",
               "--seed", "1", "--pidm.epochs", "1", "--pidm.batch-size",
               "2"}) == 0);

  // Probing the saved checkpoints.
  REQUIRE(run({"probe", "--checkpoints", kRoot + "/run_rnd", "--out",
               kRoot + "/grid.csv", "--probe.dataset-size", "60",
               "--probe.train-size", "45", "--probe.epochs", "2",
               "--probe.warmup-steps", "2"}) == 0);
  const auto grid = util::read_csv(kRoot + "/grid.csv");
  CHECK(grid.rows.size() >= 3);
  CHECK(grid.rows.back()[0] == "zero_order");

  // Runs directory -> report. Move the two runs under one root first.
  fs::create_directories(kRoot + "/runs");
  fs::rename(kRoot + "/run_rnd", kRoot + "/runs/reach_random-pidm_s0");
  fs::rename(kRoot + "/run_pre", kRoot + "/runs/reach_pretrained-both_s0");
  REQUIRE(run({"report", "--runs", kRoot + "/runs", "--out",
               kRoot + "/report", "--tail-window", "2",
               "--smooth-window", "2"}) == 0);
  CHECK(fs::exists(kRoot + "/report/table_performance.csv"));
  CHECK(fs::exists(kRoot + "/report/summary.json"));
  const auto perf = util::read_csv(kRoot + "/report/table_performance.csv");
  CHECK(perf.rows.size() == 2);

  // Report over a directory without runs fails as a config error.
  CHECK(run({"report", "--runs", kRoot + "/empty", "--out",
             kRoot + "/nope"}) == 2);
}

TEST_CASE("config file values are honored and unknown keys rejected") {
  Cleanup guard;
  fs::create_directories(kRoot);
  {
    std::ofstream cfg(kRoot + "/good.toml");
    cfg << "[explore]\niters = 2\nnum-envs = 2\nensemble-size = 2\n"
        << "[ppo]\nt-steps = 4\nepochs = 1\nminibatches = 1\n";
  }
  REQUIRE(run({"explore", "--config", kRoot + "/good.toml", "--out",
               kRoot + "/exc", "--seed", "1"}) == 0);
  const auto table = util::read_csv(kRoot + "/exc/explore_log.csv");
  CHECK(table.rows.size() == 2);  // iters = 2 came from the file

  {
    std::ofstream cfg(kRoot + "/bad.toml");
    cfg << "[explore]\nnonsense-key = 5\n";
  }
  CHECK(run({"explore", "--config", kRoot + "/bad.toml", "--out",
             kRoot + "/exd", "--seed", "1"}) == 2);
}
