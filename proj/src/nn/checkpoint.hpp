#pragma once

// Checkpoint container: JSON manifest describing every net and tensor in the
// file, followed by one little-endian f32 blob holding all parameters in
// manifest order. Round-trips are bit-exact.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nn/mlp.hpp"

namespace pidmrl::nn {

class CheckpointWriter {
 public:
  void add_net(const std::string& name, const Mlp<float>& net);
  void add_tensor(const std::string& name, std::span<const float> data);
  nlohmann::json meta = nlohmann::json::object();

  void write(const std::string& path) const;

 private:
  nlohmann::json nets_ = nlohmann::json::array();
  nlohmann::json tensors_ = nlohmann::json::array();
  std::vector<float> blob_;
};

class Checkpoint {
 public:
  static Checkpoint load(const std::string& path);

  const nlohmann::json& manifest() const { return manifest_; }
  const nlohmann::json& meta() const { return meta_; }

  bool has_net(const std::string& name) const;
  std::vector<LayerSpec> net_spec(const std::string& name) const;
  // Builds the net from the manifest and fills in its parameters.
  Mlp<float> make_net(const std::string& name) const;
  // Loads into an existing net; throws CheckpointError on any architecture
  // mismatch.
  void load_net(const std::string& name, Mlp<float>& into) const;

  bool has_tensor(const std::string& name) const;
  std::vector<float> tensor(const std::string& name) const;

 private:
  nlohmann::json manifest_;
  nlohmann::json meta_;
  std::vector<float> blob_;

  const nlohmann::json* find_net(const std::string& name) const;
  std::size_t net_blob_offset(const nlohmann::json& entry) const;
};

}  // namespace pidmrl::nn
