#pragma once

// Report generation over a directory of training runs. Each run directory
// carries status.json (task, method, seed, status), curve.csv, and
// optionally weight_updates.csv; the output is one performance table, one
// weight-update table, and a JSON summary. Outputs are pure functions of
// the inputs, so regenerating them is byte-identical.

#include <string>
#include <vector>

#include "report/metrics.hpp"

namespace pidmrl::report {

struct RunRecord {
  std::string path;
  std::string task, method;
  long seed = 0;
  bool failed = false;
  Curve curve;
};

struct ReportOptions {
  std::string runs_dir;
  std::string out_dir;
  std::string baseline_method = "random-pidm";
  int tail_window = 50;
  int smooth_window = 10;
};

std::vector<RunRecord> scan_runs(const std::string& runs_dir);

void generate_report(const ReportOptions& opt);

}  // namespace pidmrl::report
