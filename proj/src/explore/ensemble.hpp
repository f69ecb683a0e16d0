#pragma once

// Ensemble of inverse dynamics models for disagreement-driven exploration.
// Members share one architecture, differ by initialization and by their
// bootstrap resamples, and are retrained warm (continuing from current
// weights) on with-replacement samples of the training split.

#include <vector>

#include "nn/optimizer.hpp"
#include "pidm/pidm_net.hpp"
#include "pidm/window.hpp"
#include "util/rng.hpp"

namespace pidmrl::explore {

using MatF = nn::Mat<float>;

struct EnsembleConfig {
  int size = 5;
  int retrain_epochs = 5;
  int batch_size = 1024;
  double lr = 1e-3;
  double weight_decay = 0.01;
};

// Uniform with-replacement draw of `size` indices from `pool`.
std::vector<std::uint32_t> bootstrap_resample(
    const std::vector<std::uint32_t>& pool, std::size_t size, util::Rng& rng);

// Per-dimension population standard deviation across member predictions
// (n x act_dim each), averaged over action dimensions; one value per row.
void disagreement_from_preds(const std::vector<MatF>& preds, int act_dim,
                             std::vector<double>& sigma);

class Ensemble {
 public:
  Ensemble(const pidm::PidmShape& shape, const EnsembleConfig& cfg,
           std::uint64_t seed);

  int size() const { return static_cast<int>(members_.size()); }
  bool trained() const { return trained_; }
  const pidm::PidmNet& member(int j) const { return members_[j]; }
  pidm::PidmNet& member(int j) { return members_[j]; }

  // Per-dimension population standard deviation across member predictions,
  // averaged over action dimensions; one value per input row.
  void disagreement(const MatF& frames, const MatF& actions, const MatF& delta,
                    std::vector<double>& sigma);

  // Trains every member for retrain_epochs on its own bootstrap resample of
  // `train_pool` (window indices into ws). Returns per-member per-epoch mean
  // training losses.
  std::vector<std::vector<double>> train(
      const sim::Dataset& data, const pidm::WindowSet& ws,
      const std::vector<std::uint32_t>& train_pool, util::Rng& rng);

 private:
  EnsembleConfig cfg_;
  std::vector<pidm::PidmNet> members_;
  std::vector<nn::AdamOpt<float>> opts_;
  bool trained_ = false;
};

// r_i = min(c_ir * sigma, r_i_max), elementwise over `sigma`.
inline double intrinsic_from_sigma(double sigma, double c_ir, double r_max) {
  return std::min(c_ir * sigma, r_max);
}

}  // namespace pidmrl::explore
