#include "report/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "util/csv.hpp"
#include "util/errors.hpp"

namespace fs = std::filesystem;

namespace pidmrl::report {

namespace {

Curve load_curve(const std::string& path) {
  const auto table = util::read_csv(path);
  const int c_iter = table.column("iteration");
  const int c_rew = table.column("mean_reward");
  if (c_iter < 0 || c_rew < 0)
    throw util::ConfigError("curve.csv missing columns: " + path);
  Curve c;
  for (const auto& row : table.rows) {
    c.iterations.push_back(std::stol(row[c_iter]));
    c.indicator.push_back(std::stod(row[c_rew]));
  }
  return c;
}

}  // namespace

std::vector<RunRecord> scan_runs(const std::string& runs_dir) {
  if (!fs::is_directory(runs_dir))
    throw util::ConfigError("not a directory: " + runs_dir);
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(runs_dir))
    if (entry.is_directory() &&
        fs::exists(entry.path() / "status.json"))
      dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());

  std::vector<RunRecord> out;
  for (const auto& dir : dirs) {
    std::ifstream in(dir + "/status.json");
    const auto status = nlohmann::json::parse(in, nullptr, false);
    if (status.is_discarded())
      throw util::ConfigError("unparseable status.json in " + dir);
    RunRecord rec;
    rec.path = dir;
    rec.task = status.value("task", std::string("unknown"));
    rec.method = status.value("method", std::string("unknown"));
    rec.seed = status.value("seed", 0L);
    rec.failed = status.value("status", std::string("ok")) != "ok";
    if (fs::exists(dir + "/curve.csv")) rec.curve = load_curve(dir + "/curve.csv");
    rec.curve.method = rec.method;
    rec.curve.seed = rec.seed;
    rec.curve.failed = rec.failed;
    out.push_back(std::move(rec));
  }
  return out;
}

void generate_report(const ReportOptions& opt) {
  const auto runs = scan_runs(opt.runs_dir);
  if (runs.empty()) throw util::ConfigError("no runs in " + opt.runs_dir);
  fs::create_directories(opt.out_dir);

  std::set<std::string> tasks;
  for (const auto& r : runs) tasks.insert(r.task);

  util::CsvWriter perf(opt.out_dir + "/table_performance.csv",
                       {"task", "method", "runs", "failed_runs", "mean_final",
                        "final_increase_pct", "mean_iters_to_converge",
                        "iters_change_pct", "not_converged", "min_final",
                        "max_final"});
  nlohmann::json summary;
  summary["baseline_method"] = opt.baseline_method;
  summary["tail_window"] = opt.tail_window;
  summary["smooth_window"] = opt.smooth_window;
  summary["convergence_definition"] =
      "first iteration whose trailing smoothed indicator reaches 90% of the "
      "baseline method's final performance; the alternative reading (90% of "
      "each curve's own maximum) is not used";
  summary["reference_averages"] = {
      {"final_perf_increase_pct", 7.5},
      {"iters_to_converge_change_pct", -40.1},
      {"note", "directional reference from the original large-scale "
               "experiments; not a tolerance target at this scale"}};

  for (const auto& task : tasks) {
    std::vector<Curve> curves;
    for (const auto& r : runs)
      if (r.task == task) curves.push_back(r.curve);
    const auto aggs = aggregate_runs(curves, opt.baseline_method,
                                     opt.tail_window, opt.smooth_window);
    double baseline_final = 0.0;
    for (const auto& a : aggs)
      if (a.method == opt.baseline_method) baseline_final = a.mean_final;
    summary["tasks"][task]["baseline_final"] = baseline_final;
    summary["tasks"][task]["positivity_shift"] =
        positivity_shift(baseline_final);
    for (const auto& a : aggs) {
      perf.row({task, a.method, std::to_string(a.runs),
                std::to_string(a.failed_runs),
                util::format_double(a.mean_final),
                util::format_double(a.mean_final_increase_pct),
                a.mean_iters ? util::format_double(*a.mean_iters)
                             : std::string("not_converged"),
                a.iters_change_pct ? util::format_double(*a.iters_change_pct)
                                   : std::string(""),
                std::to_string(a.not_converged),
                util::format_double(a.min_final),
                util::format_double(a.max_final)});
    }
  }

  // Weight-update magnitudes, methods side by side per (task, iteration,
  // submodule), averaged over seeds.
  std::set<std::string> methods;
  for (const auto& r : runs) methods.insert(r.method);
  std::map<std::string,
           std::map<std::pair<long, std::string>,
                    std::map<std::string, std::pair<double, int>>>>
      wu;
  for (const auto& r : runs) {
    const std::string path = r.path + "/weight_updates.csv";
    if (!fs::exists(path)) continue;
    const auto table = util::read_csv(path);
    const int c_it = table.column("iteration");
    const int c_sub = table.column("submodule");
    const int c_val = table.column("value");
    if (c_it < 0 || c_sub < 0 || c_val < 0) continue;
    for (const auto& row : table.rows) {
      auto& cell = wu[r.task][{std::stol(row[c_it]), row[c_sub]}][r.method];
      cell.first += std::stod(row[c_val]);
      cell.second += 1;
    }
  }
  std::vector<std::string> header = {"task", "iteration", "submodule"};
  for (const auto& m : methods) header.push_back(m);
  util::CsvWriter wcsv(opt.out_dir + "/table_update_magnitude.csv", header);
  for (const auto& [task, rows] : wu) {
    for (const auto& [key, per_method] : rows) {
      std::vector<std::string> cells = {task, std::to_string(key.first),
                                        key.second};
      for (const auto& m : methods) {
        const auto it = per_method.find(m);
        cells.push_back(it == per_method.end()
                            ? std::string("")
                            : util::format_double(it->second.first /
                                                  it->second.second));
      }
      wcsv.row(cells);
    }
  }

  std::ofstream js(opt.out_dir + "/summary.json", std::ios::binary);
  js << summary.dump(2) << "\n";
}

}  // namespace pidmrl::report
