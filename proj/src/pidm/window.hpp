#pragma once

// Training-pair assembly over a transition dataset. A valid target at
// transition t needs frames x_{t-K+1..t}, actions a_{t-K..t-1}, and
// x_{t+1}, all inside one episode; the first K transitions of every episode
// therefore never serve as targets.

#include <cstdint>
#include <vector>

#include "nn/mat.hpp"
#include "sim/dataset.hpp"
#include "util/rng.hpp"

namespace pidmrl::pidm {

struct WindowSet {
  int k_hist = 4;
  // Per valid target: indices of records t-K..t in the dataset.
  std::vector<std::vector<std::uint32_t>> chains;
  std::uint64_t skipped_boundary = 0;  // transitions rejected as targets

  std::size_t size() const { return chains.size(); }

  static WindowSet build(const sim::Dataset& data, int k_hist);
};

// Fills one training pair into float rows (caller-sized):
//   frames  [k*4]: noise-free x_{t-K+1..t}, oldest..newest
//   actions [k*2]: a_{t-K..t-1}, oldest..newest
//   delta   [4]  : x_{t+1} - x_t, wrap-aware on the angle channels
//   label   [2]  : a_t
//   q_now   [2]  : optional, the joint angles at time t
void fill_pair(const sim::Dataset& data, const WindowSet& ws,
               std::size_t widx, float* frames, float* actions, float* delta,
               float* label, float* q_now = nullptr);

// Batch assembly for a list of window indices.
void fill_batch(const sim::Dataset& data, const WindowSet& ws,
                const std::vector<std::uint32_t>& order, std::size_t begin,
                std::size_t count, nn::Mat<float>& frames,
                nn::Mat<float>& actions, nn::Mat<float>& delta,
                nn::Mat<float>& label, nn::Mat<float>* q_now = nullptr);

// In-place mirror of `count` chosen rows of an assembled batch: every frame,
// action, delta, and label channel negates (angles are wrap-aware).
void mirror_rows(nn::Mat<float>& frames, nn::Mat<float>& actions,
                 nn::Mat<float>& delta, nn::Mat<float>& label,
                 const std::vector<std::uint32_t>& rows);

// Random half-batch mirror: picks floor(n/2) distinct rows with `rng` and
// mirrors them. Returns the chosen rows (applying again restores the batch).
std::vector<std::uint32_t> augment_symmetry(nn::Mat<float>& frames,
                                            nn::Mat<float>& actions,
                                            nn::Mat<float>& delta,
                                            nn::Mat<float>& label,
                                            util::Rng& rng);

// Adds rollout-style uniform noise to the proprio history frames only.
void add_frame_noise(nn::Mat<float>& frames, const sim::NoiseConfig& noise,
                     util::Rng& rng);

}  // namespace pidmrl::pidm
