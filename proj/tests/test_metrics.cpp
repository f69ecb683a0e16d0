#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "report/metrics.hpp"
#include "report/projection.hpp"
#include "report/report.hpp"
#include "util/csv.hpp"
#include "util/errors.hpp"
#include "util/rng.hpp"

using namespace pidmrl;
using report::Curve;

namespace {

Curve make_curve(const std::vector<double>& v, const std::string& method = "m",
                 long seed = 0) {
  Curve c;
  c.method = method;
  c.seed = seed;
  for (std::size_t i = 0; i < v.size(); ++i) {
    c.iterations.push_back(static_cast<long>(i));
    c.indicator.push_back(v[i]);
  }
  return c;
}

// Linear ramp to `top` at iteration `at`, flat afterwards.
Curve ramp(int len, int at, double top, const std::string& method,
           long seed = 0) {
  std::vector<double> v(len);
  for (int i = 0; i < len; ++i)
    v[i] = i < at ? top * i / at : top;
  return make_curve(v, method, seed);
}

}  // namespace

TEST_CASE("final performance tail mean") {
  CHECK(report::final_performance(make_curve({2.5, 2.5, 2.5}), 2) == 2.5);
  CHECK(report::final_performance(make_curve({0.0, 1.0, 3.0}), 2) == 2.0);
  CHECK_THROWS_AS(report::final_performance(make_curve({1.0}), 2),
                  util::ConfigError);
}

TEST_CASE("final performance increase percentages") {
  CHECK(report::final_perf_increase(5.0, 5.0) == 0.0);
  // The worked +7.5% case.
  CHECK(report::final_perf_increase(1.075 * 4.0, 4.0) ==
        doctest::Approx(7.5).epsilon(1e-9));
  CHECK(report::final_perf_increase(0.9 * 4.0, 4.0) ==
        doctest::Approx(-10.0).epsilon(1e-9));
  CHECK_THROWS_AS(report::final_perf_increase(1.0, 0.0), util::ConfigError);

  // Negative baseline: the declared shift makes it positive and keeps
  // self-comparison at zero.
  CHECK(report::positivity_shift(-2.0) == 4.0);
  CHECK(report::final_perf_increase(-2.0, -2.0) == 0.0);
  CHECK(report::final_perf_increase(-1.0, -2.0) ==
        doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("iterations to converge and the relative form") {
  // Baseline converges at 200, candidate at 120 -> -40%.
  const Curve base = ramp(400, 222, 1.0, "base");
  const Curve fast = ramp(400, 133, 1.0, "fast");
  const double base_final = report::final_performance(base, 50);
  const auto it_base = report::iterations_to_converge(base, base_final, 10);
  const auto it_fast = report::iterations_to_converge(fast, base_final, 10);
  REQUIRE(it_base.has_value());
  REQUIRE(it_fast.has_value());
  CHECK(report::iters_change_percent(120, 200) ==
        doctest::Approx(-40.0).epsilon(1e-12));
  CHECK(*it_fast < *it_base);

  // Identical curves: zero percent change.
  CHECK(report::iters_change_percent(*it_base, *it_base) == 0.0);

  // A curve that never reaches the threshold reports no value.
  const Curve low = ramp(400, 50, 0.5, "low");
  CHECK(!report::iterations_to_converge(low, base_final, 10).has_value());
}

TEST_CASE("uniformly larger curves never converge later") {
  util::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(120);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    std::vector<double> hi(v);
    for (auto& x : hi) x += rng.uniform(0.0, 0.5);
    const Curve a = make_curve(v), b = make_curve(hi);
    const double thr_base = 0.8;
    const auto ia = report::iterations_to_converge(a, thr_base, 10);
    const auto ib = report::iterations_to_converge(b, thr_base, 10);
    if (ia.has_value()) {
      REQUIRE(ib.has_value());
      REQUIRE(*ib <= *ia);
    }
  }
}

TEST_CASE("seed aggregation handles spreads and failed runs") {
  std::vector<Curve> curves;
  for (int s = 0; s < 5; ++s) curves.push_back(ramp(200, 100, 1.0, "base", s));
  for (int s = 0; s < 5; ++s) {
    Curve c = ramp(200, 60, 1.2, "better", s);
    if (s == 4) c.failed = true;  // diverged run: excluded, counted
    curves.push_back(c);
  }
  const auto aggs = report::aggregate_runs(curves, "base", 50, 10);
  REQUIRE(aggs.size() == 2);
  const auto& base = aggs[0].method == "base" ? aggs[0] : aggs[1];
  const auto& better = aggs[0].method == "better" ? aggs[0] : aggs[1];
  CHECK(base.runs == 5);
  CHECK(base.failed_runs == 0);
  CHECK(base.min_final == base.max_final);  // identical seeds: zero spread
  CHECK(base.mean_final_increase_pct == 0.0);
  CHECK(better.runs == 4);
  CHECK(better.failed_runs == 1);
  CHECK(better.mean_final_increase_pct > 15.0);
  REQUIRE(better.iters_change_pct.has_value());
  CHECK(*better.iters_change_pct < 0.0);
}

TEST_CASE("projection: identical datasets, zero mean, cluster separation") {
  util::Rng rng(11);
  std::vector<double> cloud;
  for (int i = 0; i < 200; ++i) {
    cloud.push_back(rng.normal(0, 1));
    cloud.push_back(rng.normal(0, 0.5));
    cloud.push_back(rng.normal(0, 0.25));
    cloud.push_back(rng.normal(0, 0.1));
  }
  const auto proj = report::fit_projection({cloud, cloud});
  // Projection of the mean-centered data has zero mean.
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < cloud.size(); i += 4) {
    const auto p = proj.apply({cloud[i], cloud[i + 1], cloud[i + 2],
                               cloud[i + 3]});
    m0 += p[0];
    m1 += p[1];
  }
  CHECK(std::abs(m0) / (cloud.size() / 4) < 1e-9);
  CHECK(std::abs(m1) / (cloud.size() / 4) < 1e-9);

  // Identical datasets project to identical clouds (trivially, same map).
  const auto pa = proj.apply({1, 2, 3, 4});
  const auto pb = proj.apply({1, 2, 3, 4});
  CHECK(pa == pb);

  // Two linearly separable clusters stay separable after projection.
  std::vector<double> c1, c2;
  for (int i = 0; i < 100; ++i) {
    c1.insert(c1.end(), {rng.normal(5, 0.3), rng.normal(0, 0.3),
                         rng.normal(0, 0.3), rng.normal(0, 0.3)});
    c2.insert(c2.end(), {rng.normal(-5, 0.3), rng.normal(0, 0.3),
                         rng.normal(0, 0.3), rng.normal(0, 0.3)});
  }
  const auto proj2 = report::fit_projection({c1, c2});
  double min1 = 1e9, max2 = -1e9;
  for (std::size_t i = 0; i < c1.size(); i += 4) {
    min1 = std::min(min1,
                    proj2.apply({c1[i], c1[i + 1], c1[i + 2], c1[i + 3]})[0]);
    max2 = std::max(max2,
                    proj2.apply({c2[i], c2[i + 1], c2[i + 2], c2[i + 3]})[0]);
  }
  CHECK(min1 > max2);
}

TEST_CASE("report generation is a pure function of its inputs") {
  namespace fs = std::filesystem;
  const std::string root = "test_metrics_runs";
  fs::remove_all(root);
  fs::create_directories(root);
  util::Rng rng(13);
  for (const std::string method : {"random-pidm", "pretrained-both"}) {
    for (int seed = 0; seed < 2; ++seed) {
      const std::string dir =
          root + "/reach_" + method + "_s" + std::to_string(seed);
      fs::create_directories(dir);
      std::ofstream st(dir + "/status.json");
      st << "{\"task\":\"reach\",\"method\":\"" << method
         << "\",\"seed\":" << seed << ",\"status\":\"ok\"}";
      st.close();
      util::CsvWriter curve(dir + "/curve.csv", {"iteration", "mean_reward"});
      for (int i = 0; i < 120; ++i)
        curve.row({std::to_string(i),
                   util::format_double(
                       (method == "pretrained-both" ? 1.2 : 1.0) *
                       std::min(1.0, i / 60.0))});
      util::CsvWriter wu(dir + "/weight_updates.csv",
                         {"iteration", "submodule", "value"});
      wu.row({"0", "actor_backbone", "0.001"});
    }
  }
  report::ReportOptions opt;
  opt.runs_dir = root;
  opt.out_dir = root + "/report1";
  opt.tail_window = 20;
  report::generate_report(opt);
  opt.out_dir = root + "/report2";
  report::generate_report(opt);

  for (const std::string f :
       {"table_performance.csv", "table_update_magnitude.csv",
        "summary.json"}) {
    std::ifstream a(root + "/report1/" + f, std::ios::binary);
    std::ifstream b(root + "/report2/" + f, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)),
                   std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)),
                   std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
  }

  const auto table = util::read_csv(root + "/report1/table_performance.csv");
  CHECK(table.rows.size() == 2);
  fs::remove_all(root);
}
