#include "report/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "util/errors.hpp"

namespace pidmrl::report {

double final_performance(const Curve& c, int tail_window) {
  if (tail_window < 1 ||
      c.indicator.size() < static_cast<std::size_t>(tail_window))
    throw util::ConfigError("final_performance: curve shorter than window");
  double acc = 0.0;
  for (std::size_t i = c.indicator.size() - tail_window;
       i < c.indicator.size(); ++i)
    acc += c.indicator[i];
  return acc / tail_window;
}

double positivity_shift(double baseline_final) {
  if (baseline_final == 0.0)
    throw util::ConfigError("relative metric: zero baseline");
  return baseline_final > 0.0 ? 0.0 : -2.0 * baseline_final;
}

double final_perf_increase(double final_value, double baseline_final) {
  const double s = positivity_shift(baseline_final);
  const double base = baseline_final + s;
  return 100.0 * ((final_value + s) - base) / std::abs(base);
}

std::optional<long> iterations_to_converge(const Curve& c,
                                           double baseline_final,
                                           int smooth_window) {
  const double s = positivity_shift(baseline_final);
  const double threshold = 0.9 * (baseline_final + s);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < c.indicator.size(); ++i) {
    acc += c.indicator[i] + s;
    count += 1;
    if (count > static_cast<std::size_t>(smooth_window)) {
      acc -= c.indicator[i - smooth_window] + s;
      count -= 1;
    }
    if (acc / static_cast<double>(count) >= threshold)
      return c.iterations[i];
  }
  return std::nullopt;
}

double iters_change_percent(long iters, long baseline_iters) {
  if (baseline_iters <= 0)
    throw util::ConfigError("iters_change: non-positive baseline");
  return 100.0 * static_cast<double>(iters - baseline_iters) /
         static_cast<double>(baseline_iters);
}

std::vector<MethodAggregate> aggregate_runs(const std::vector<Curve>& curves,
                                            const std::string& baseline_method,
                                            int tail_window,
                                            int smooth_window) {
  std::vector<std::string> methods;
  for (const auto& c : curves)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);

  auto successful_of = [&](const std::string& m) {
    std::vector<const Curve*> out;
    for (const auto& c : curves)
      if (c.method == m && !c.failed) out.push_back(&c);
    return out;
  };

  const auto baseline_runs = successful_of(baseline_method);
  if (baseline_runs.empty())
    throw util::ConfigError("aggregate: no successful baseline runs for " +
                            baseline_method);
  double baseline_final = 0.0;
  for (const auto* c : baseline_runs)
    baseline_final += final_performance(*c, tail_window);
  baseline_final /= static_cast<double>(baseline_runs.size());

  // Baseline convergence (against its own final) for the relative form.
  double baseline_iters_sum = 0.0;
  int baseline_iters_n = 0;
  for (const auto* c : baseline_runs) {
    const auto it = iterations_to_converge(*c, baseline_final, smooth_window);
    if (it) {
      baseline_iters_sum += static_cast<double>(*it);
      baseline_iters_n += 1;
    }
  }
  const std::optional<double> baseline_iters =
      baseline_iters_n
          ? std::optional<double>(baseline_iters_sum / baseline_iters_n)
          : std::nullopt;

  std::vector<MethodAggregate> out;
  for (const auto& m : methods) {
    MethodAggregate agg;
    agg.method = m;
    const auto runs = successful_of(m);
    for (const auto& c : curves)
      if (c.method == m && c.failed) agg.failed_runs += 1;
    agg.runs = static_cast<int>(runs.size());
    if (runs.empty()) {
      out.push_back(agg);
      continue;
    }
    double fsum = 0.0, isum = 0.0;
    int iconv = 0;
    agg.min_final = 1e300;
    agg.max_final = -1e300;
    for (const auto* c : runs) {
      const double f = final_performance(*c, tail_window);
      fsum += f;
      agg.min_final = std::min(agg.min_final, f);
      agg.max_final = std::max(agg.max_final, f);
      const auto it = iterations_to_converge(*c, baseline_final,
                                             smooth_window);
      if (it) {
        isum += static_cast<double>(*it);
        iconv += 1;
      } else {
        agg.not_converged += 1;
      }
    }
    agg.mean_final = fsum / agg.runs;
    agg.mean_final_increase_pct =
        final_perf_increase(agg.mean_final, baseline_final);
    if (iconv) agg.mean_iters = isum / iconv;
    if (agg.mean_iters && baseline_iters && *baseline_iters > 0.0)
      agg.iters_change_pct = 100.0 * (*agg.mean_iters - *baseline_iters) /
                             *baseline_iters;
    out.push_back(agg);
  }
  return out;
}

}  // namespace pidmrl::report
