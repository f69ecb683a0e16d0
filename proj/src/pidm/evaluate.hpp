#pragma once

// Validation-error analysis binned by commanded action magnitude |a - q|,
// reported per (sample, joint) datapoint: absolute error |a_hat - a| and a
// per-bin normalized error, the ratio of the bin's mean absolute error to
// its mean action magnitude. The zero-order reference (predict a = q, i.e.
// no change) has normalized error exactly 1 in every bin by construction.

#include <vector>

#include "pidm/pidm_net.hpp"

namespace pidmrl::pidm {

struct EvalBin {
  double lo = 0.0, hi = 0.0;
  long count = 0;
  double mean_abs_err = 0.0;
  double mean_magnitude = 0.0;
  double normalized = 0.0;  // mean_abs_err / mean_magnitude
  bool low_sample = false;  // fewer than 10 datapoints
};

struct EvalResult {
  std::vector<EvalBin> bins;
  double overall_abs_err = 0.0;
  double overall_normalized = 0.0;
  long total_points = 0;
};

// frames may carry rollout-style noise; labels, deltas and q_now are clean.
EvalResult evaluate_actions(const PidmNet& net, const MatF& frames,
                            const MatF& actions, const MatF& delta,
                            const MatF& label, const MatF& q_now, int n_bins);

// Same binning for the zero-order predictor; useful as a reference table.
EvalResult evaluate_zero_order(const MatF& label, const MatF& q_now,
                               int n_bins, double max_magnitude);

}  // namespace pidmrl::pidm
