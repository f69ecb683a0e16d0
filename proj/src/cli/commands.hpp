#pragma once

// Subcommand implementations. Each writes a self-contained output directory
// (effective config, artifacts, logs) and never touches a directory that
// already holds results.

#include <string>
#include <vector>

#include "cli/run_config.hpp"
#include "report/report.hpp"

namespace pidmrl::cli {

std::string run_config_to_toml(const RunConfig& cfg);

void cmd_explore(const RunConfig& cfg);
void cmd_pretrain(const RunConfig& cfg, const std::string& data_path,
                  const std::string& expected_source);
void cmd_train(const RunConfig& cfg);
void cmd_probe(const RunConfig& cfg, const std::string& checkpoints_dir,
               const std::string& out_csv);

struct BenchOptions {
  RunConfig base;
  std::string out;
  std::string pidm_ckpt;
  std::vector<std::string> tasks = {"reach", "track", "posture"};
  std::vector<std::string> methods = {"vanilla", "random-pidm",
                                      "pretrained-both"};
  int seeds = 5;
};

void cmd_bench(const BenchOptions& opt);

int run_cli(int argc, const char* const* argv);

}  // namespace pidmrl::cli
