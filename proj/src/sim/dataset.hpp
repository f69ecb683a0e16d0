#pragma once

// Transition dataset file: JSON manifest followed by a little-endian f32
// record blob. One record per environment step, 13 floats:
// x_t[4] | a_t[2] | x_{t+1}[4] | done | episode_id | env_id.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sim/env.hpp"

namespace pidmrl::sim {

struct TransitionRec {
  float x_t[4];
  float a[2];
  float x_tp1[4];
  float done;
  float episode_id;
  float env_id;
};
static_assert(sizeof(TransitionRec) == 13 * sizeof(float));

inline constexpr int kRecFloats = 13;

TransitionRec make_record(const StepOutput& step, int env_id);

class Dataset {
 public:
  Dataset() = default;

  nlohmann::json manifest;
  std::vector<TransitionRec> records;

  void append(const TransitionRec& rec) { records.push_back(rec); }
  std::size_t size() const { return records.size(); }

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

  // Manifest for datasets produced by this embodiment/config.
  static nlohmann::json make_manifest(const EnvConfig& cfg,
                                      const std::string& source,
                                      std::uint64_t seed, int k_hist);
};

}  // namespace pidmrl::sim
