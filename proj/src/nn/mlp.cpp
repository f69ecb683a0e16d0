#include "nn/mlp.hpp"

namespace pidmrl::nn {

const char* act_name(Act a) {
  switch (a) {
    case Act::Elu: return "elu";
    case Act::SigSpan: return "sig_span";
    default: return "identity";
  }
}

Act act_from_name(const std::string& name) {
  if (name == "elu") return Act::Elu;
  if (name == "sig_span") return Act::SigSpan;
  if (name == "identity") return Act::Identity;
  throw util::ConfigError("unknown activation: " + name);
}

std::vector<LayerSpec> mlp_spec(int input_dim, const std::vector<int>& hidden,
                                int output_dim, Act out_act,
                                double act_scale) {
  std::vector<LayerSpec> spec;
  int prev = input_dim;
  for (int h : hidden) {
    spec.push_back({prev, h, Act::Elu, act_scale});
    prev = h;
  }
  spec.push_back({prev, output_dim, out_act, act_scale});
  return spec;
}

}  // namespace pidmrl::nn
