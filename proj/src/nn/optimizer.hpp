#pragma once

// Adam / AdamW over a fixed list of parameter blobs, plus global-norm
// gradient clipping. The blob list is pinned at init; step() must be called
// with blobs of identical sizes in identical order.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kernels/kernels.hpp"
#include "kernels/kernels_ref.hpp"
#include "util/errors.hpp"

namespace pidmrl::nn {

enum class OptKind { Adam, AdamW };

struct OptConfig {
  OptKind kind = OptKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled; ignored for plain Adam
};

template <typename T>
double global_grad_norm(const std::vector<std::span<T>>& grads) {
  double ss = 0.0;
  for (const auto& g : grads) {
    if constexpr (std::is_same_v<std::remove_const_t<T>, float>)
      ss += kern::sum_squares(g.data(), g.size());
    else
      ss += kern::ref::sum_squares(g.data(), g.size());
  }
  return std::sqrt(ss);
}

// Scales grads so the global norm is at most g_max. Zero grads pass through.
// Returns the pre-clip norm. The scale carries a few-ulp margin so the
// post-clip norm honors the bound after element rounding.
template <typename T>
double clip_grad_norm(const std::vector<std::span<T>>& grads, double g_max) {
  if (g_max <= 0.0) throw util::ConfigError("clip_grad_norm: g_max must be > 0");
  const double norm = global_grad_norm(grads);
  if (norm > g_max) {
    const double margin = 1.0 - 4.0 * std::numeric_limits<T>::epsilon();
    const T s = static_cast<T>(g_max / norm * margin);
    for (const auto& g : grads)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
  }
  return norm;
}

template <typename T>
class AdamOpt {
 public:
  AdamOpt() = default;
  AdamOpt(const OptConfig& cfg, const std::vector<std::span<T>>& params)
      : cfg_(cfg) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), T(0));
      v_.emplace_back(p.size(), T(0));
    }
  }

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long step_count() const { return t_; }
  const OptConfig& config() const { return cfg_; }

  void step(const std::vector<std::span<T>>& params,
            const std::vector<std::span<const T>>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw util::ConfigError("optimizer: blob list mismatch");
    double gss = 0.0;
    for (const auto& g : grads) {
      if constexpr (std::is_same_v<T, float>)
        gss += kern::sum_squares(g.data(), g.size());
      else
        gss += kern::ref::sum_squares(g.data(), g.size());
    }
    if (!std::isfinite(gss))
      throw util::TrainingDivergence("non-finite gradient in optimizer step");
    ++t_;
    const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta1, t_)));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta2, t_)));
    const T wd = cfg_.kind == OptKind::AdamW
                     ? static_cast<T>(cfg_.weight_decay)
                     : T(0);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].size() != m_[i].size())
        throw util::ConfigError("optimizer: blob size mismatch");
      if constexpr (std::is_same_v<T, float>) {
        kern::adam_step(params[i].data(), grads[i].data(), m_[i].data(),
                        v_[i].data(), params[i].size(),
                        static_cast<float>(cfg_.lr),
                        static_cast<float>(cfg_.beta1),
                        static_cast<float>(cfg_.beta2),
                        static_cast<float>(cfg_.eps), c1, c2, wd);
      } else {
        kern::ref::adam_step(params[i].data(), grads[i].data(), m_[i].data(),
                             v_[i].data(), params[i].size(),
                             static_cast<T>(cfg_.lr),
                             static_cast<T>(cfg_.beta1),
                             static_cast<T>(cfg_.beta2),
                             static_cast<T>(cfg_.eps), c1, c2, wd);
      }
    }
  }

 private:
  OptConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace pidmrl::nn
