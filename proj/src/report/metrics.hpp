#pragma once

// Evaluation arithmetic for training curves: tail-window final performance,
// percent change against a baseline, smoothed threshold crossing for
// iterations-to-converge, and multi-seed aggregation with failed-run
// bookkeeping.

#include <optional>
#include <string>
#include <vector>

namespace pidmrl::report {

struct Curve {
  std::vector<long> iterations;
  std::vector<double> indicator;  // main performance indicator (mean reward)
  std::string method;
  long seed = 0;
  bool failed = false;  // run aborted (diverged); excluded from aggregates
};

// Mean over the last `tail_window` points. Throws if the curve is shorter.
double final_performance(const Curve& c, int tail_window);

// When the baseline final value is not positive the indicator axis is
// shifted so that it becomes positive; the shift used is returned so reports
// can record it. Zero baseline is an error.
double positivity_shift(double baseline_final);

// 100 * (final - baseline) / |baseline|, after the shared shift.
double final_perf_increase(double final_value, double baseline_final);

// First iteration whose trailing-smoothed indicator reaches 90% of the
// (shifted) baseline final. nullopt = never converged.
std::optional<long> iterations_to_converge(const Curve& c,
                                           double baseline_final,
                                           int smooth_window = 10);

double iters_change_percent(long iters, long baseline_iters);

struct MethodAggregate {
  std::string method;
  int runs = 0;
  int failed_runs = 0;
  double mean_final = 0.0;
  double min_final = 0.0, max_final = 0.0;
  double mean_final_increase_pct = 0.0;      // vs baseline method
  std::optional<double> mean_iters;          // over converged runs
  int not_converged = 0;
  std::optional<double> iters_change_pct;    // vs baseline mean iters
};

// Aggregates per method against `baseline_method`. The baseline final value
// is the mean final performance over the baseline's successful runs; the
// convergence threshold derives from it for every method.
std::vector<MethodAggregate> aggregate_runs(const std::vector<Curve>& curves,
                                            const std::string& baseline_method,
                                            int tail_window = 50,
                                            int smooth_window = 10);

}  // namespace pidmrl::report
