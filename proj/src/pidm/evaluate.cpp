#include "pidm/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "util/errors.hpp"

namespace pidmrl::pidm {

namespace {

EvalResult bin_errors(const std::vector<double>& magnitude,
                      const std::vector<double>& abs_err, int n_bins,
                      double max_mag) {
  EvalResult res;
  res.total_points = static_cast<long>(magnitude.size());
  const double width = max_mag / n_bins;
  res.bins.resize(n_bins);
  std::vector<double> err_sum(n_bins, 0.0), mag_sum(n_bins, 0.0);
  for (int b = 0; b < n_bins; ++b) {
    res.bins[b].lo = b * width;
    res.bins[b].hi = (b + 1) * width;
  }
  double tot_err = 0.0, tot_mag = 0.0;
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>(magnitude[i] / width) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    res.bins[b].count += 1;
    err_sum[b] += abs_err[i];
    mag_sum[b] += magnitude[i];
    tot_err += abs_err[i];
    tot_mag += magnitude[i];
  }
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = res.bins[b];
    if (bin.count > 0) {
      bin.mean_abs_err = err_sum[b] / bin.count;
      bin.mean_magnitude = mag_sum[b] / bin.count;
      bin.normalized =
          bin.mean_magnitude > 0.0 ? bin.mean_abs_err / bin.mean_magnitude
                                   : 0.0;
    }
    bin.low_sample = bin.count < 10;
  }
  if (!magnitude.empty()) {
    res.overall_abs_err = tot_err / static_cast<double>(magnitude.size());
    res.overall_normalized = tot_mag > 0.0 ? tot_err / tot_mag : 0.0;
  }
  return res;
}

}  // namespace

EvalResult evaluate_actions(const PidmNet& net, const MatF& frames,
                            const MatF& actions, const MatF& delta,
                            const MatF& label, const MatF& q_now,
                            int n_bins) {
  if (label.rows == 0) throw util::ConfigError("evaluate: empty set");
  PidmCache cache;
  std::vector<double> magnitude, abs_err;
  magnitude.reserve(static_cast<std::size_t>(label.rows) * 2);
  abs_err.reserve(magnitude.capacity());
  double max_mag = 0.0;

  const int chunk = 4096;
  MatF cf, ca, cd;
  for (int start = 0; start < frames.rows; start += chunk) {
    const int n = std::min(chunk, frames.rows - start);
    cf.resize(n, frames.cols);
    ca.resize(n, actions.cols);
    cd.resize(n, delta.cols);
    std::memcpy(cf.data(), frames.row(start), sizeof(float) * cf.size());
    std::memcpy(ca.data(), actions.row(start), sizeof(float) * ca.size());
    std::memcpy(cd.data(), delta.row(start), sizeof(float) * cd.size());
    const MatF& pred = net.forward(cf, ca, cd, cache);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < label.cols; ++j) {
        const double a = label.at(start + i, j);
        const double q = q_now.at(start + i, j);
        magnitude.push_back(std::abs(a - q));
        abs_err.push_back(std::abs(static_cast<double>(pred.at(i, j)) - a));
      }
    }
  }
  for (const double m : magnitude) max_mag = std::max(max_mag, m);
  return bin_errors(magnitude, abs_err, n_bins, max_mag);
}

EvalResult evaluate_zero_order(const MatF& label, const MatF& q_now,
                               int n_bins, double max_magnitude) {
  if (label.rows == 0) throw util::ConfigError("evaluate: empty set");
  std::vector<double> magnitude, abs_err;
  for (int i = 0; i < label.rows; ++i)
    for (int j = 0; j < label.cols; ++j) {
      const double m = std::abs(static_cast<double>(label.at(i, j)) -
                                q_now.at(i, j));
      magnitude.push_back(m);
      abs_err.push_back(m);  // predicting "no change" errs by the magnitude
    }
  double max_mag = max_magnitude;
  if (max_mag <= 0.0)
    for (const double m : magnitude) max_mag = std::max(max_mag, m);
  return bin_errors(magnitude, abs_err, n_bins, max_mag);
}

}  // namespace pidmrl::pidm
