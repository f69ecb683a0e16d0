#pragma once

// Plain fully connected network with analytic gradients. Batched forward and
// backward; activations are recomputable from the cached post-activation
// values, so the cache stores only one matrix per layer.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "kernels/kernels.hpp"
#include "kernels/kernels_ref.hpp"
#include "nn/mat.hpp"
#include "util/errors.hpp"
#include "util/rng.hpp"

namespace pidmrl::nn {

enum class Act : std::uint8_t { Identity = 0, Elu = 1, SigSpan = 2 };

const char* act_name(Act a);
Act act_from_name(const std::string& name);

struct LayerSpec {
  int in = 0;
  int out = 0;
  Act act = Act::Identity;
  double act_scale = 2.5;  // only used by SigSpan
};

// Hidden sizes + output, ELU on hiddens, chosen activation on the output.
std::vector<LayerSpec> mlp_spec(int input_dim, const std::vector<int>& hidden,
                                int output_dim, Act out_act = Act::Identity,
                                double act_scale = 2.5);

template <typename T>
struct Layer {
  Mat<T> w;             // out x in
  std::vector<T> b;     // out
  Act act = Act::Identity;
  T act_scale = T(2.5);
};

template <typename T>
struct Grads {
  std::vector<Mat<T>> w;
  std::vector<std::vector<T>> b;

  void zero() {
    for (auto& m : w) std::fill(m.v.begin(), m.v.end(), T(0));
    for (auto& v : b) std::fill(v.begin(), v.end(), T(0));
  }

  std::vector<std::span<T>> blobs() {
    std::vector<std::span<T>> out;
    for (std::size_t i = 0; i < w.size(); ++i) {
      out.emplace_back(w[i].v);
      out.emplace_back(b[i]);
    }
    return out;
  }
};

template <typename T>
struct Cache {
  std::vector<Mat<T>> acts;  // acts[0] = input copy, acts[l+1] = layer l output
  Mat<T> scratch_a, scratch_b;
};

template <typename T>
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<LayerSpec> spec);

  static Mlp he_init(const std::vector<LayerSpec>& spec, util::Rng& rng,
                     double final_layer_scale = 1.0);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().w.cols; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().w.rows; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer<T>>& layers() const { return layers_; }
  std::vector<Layer<T>>& layers() { return layers_; }

  std::vector<LayerSpec> spec() const;
  std::size_t param_count() const;

  // Returns cache.acts.back(); the cache stays valid until the next forward.
  const Mat<T>& forward(const Mat<T>& x, Cache<T>& cache) const;

  // Accumulates into g; g must be zeroed or carry deliberate accumulation.
  // If dx is non-null it receives the gradient w.r.t. the input batch.
  void backward(Cache<T>& cache, const Mat<T>& dy, Grads<T>& g,
                Mat<T>* dx = nullptr) const;

  Grads<T> make_grads() const;
  std::vector<std::span<T>> param_blobs();
  std::vector<std::span<const T>> param_blobs() const;

 private:
  std::vector<Layer<T>> layers_;
};

// Mean absolute error with subgradient 0 at zero residual. grad is resized
// to pred's shape.
template <typename T>
T l1_loss(const Mat<T>& pred, const Mat<T>& target, Mat<T>* grad = nullptr);

// Per-layer mean |delta| over the layer's weights and biases together.
template <typename T>
std::vector<double> param_delta(const Mlp<T>& before, const Mlp<T>& after);

using MlpF = Mlp<float>;
using MlpD = Mlp<double>;

// --- implementation ---

namespace detail {

template <typename T>
void lin_fwd(const T* x, const T* w, const T* b, T* y, int n, int in, int out) {
  if constexpr (std::is_same_v<T, float>)
    kern::linear_forward(x, w, b, y, n, in, out);
  else
    kern::ref::linear_forward(x, w, b, y, n, in, out);
}

template <typename T>
void lin_bwd_input(const T* dy, const T* w, T* dx, int n, int in, int out) {
  if constexpr (std::is_same_v<T, float>)
    kern::linear_backward_input(dy, w, dx, n, in, out);
  else
    kern::ref::linear_backward_input(dy, w, dx, n, in, out);
}

template <typename T>
void lin_bwd_params(const T* x, const T* dy, T* dw, T* db, int n, int in,
                    int out) {
  if constexpr (std::is_same_v<T, float>)
    kern::linear_backward_params(x, dy, dw, db, n, in, out);
  else
    kern::ref::linear_backward_params(x, dy, dw, db, n, in, out);
}

template <typename T>
void act_fwd(Act act, T* a, std::size_t n, T scale) {
  switch (act) {
    case Act::Identity:
      break;
    case Act::Elu:
      if constexpr (std::is_same_v<T, float>)
        kern::elu_forward(a, a, n);
      else
        kern::ref::elu_forward(a, a, n);
      break;
    case Act::SigSpan:
      if constexpr (std::is_same_v<T, float>)
        kern::sig_span_forward(a, a, n, scale);
      else
        kern::ref::sig_span_forward(a, a, n, scale);
      break;
  }
}

template <typename T>
void act_bwd(Act act, const T* a, T* dy, std::size_t n, T scale) {
  switch (act) {
    case Act::Identity:
      break;
    case Act::Elu:
      if constexpr (std::is_same_v<T, float>)
        kern::elu_backward_from_act(a, dy, dy, n);
      else
        kern::ref::elu_backward_from_act(a, dy, dy, n);
      break;
    case Act::SigSpan:
      if constexpr (std::is_same_v<T, float>)
        kern::sig_span_backward_from_act(a, dy, dy, n, scale);
      else
        kern::ref::sig_span_backward_from_act(a, dy, dy, n, scale);
      break;
  }
}

}  // namespace detail

template <typename T>
Mlp<T>::Mlp(std::vector<LayerSpec> spec) {
  int prev = -1;
  for (const auto& s : spec) {
    if (s.in <= 0 || s.out <= 0)
      throw util::ConfigError("layer dims must be positive");
    if (prev >= 0 && s.in != prev)
      throw util::ConfigError("layer dims do not chain");
    prev = s.out;
    Layer<T> l;
    l.w.resize(s.out, s.in);
    l.b.assign(s.out, T(0));
    l.act = s.act;
    l.act_scale = static_cast<T>(s.act_scale);
    layers_.push_back(std::move(l));
  }
}

template <typename T>
Mlp<T> Mlp<T>::he_init(const std::vector<LayerSpec>& spec, util::Rng& rng,
                       double final_layer_scale) {
  Mlp net(spec);
  for (std::size_t li = 0; li < net.layers_.size(); ++li) {
    auto& l = net.layers_[li];
    const double std = std::sqrt(2.0 / l.w.cols) *
                       (li + 1 == net.layers_.size() ? final_layer_scale : 1.0);
    for (auto& x : l.w.v) x = static_cast<T>(rng.normal(0.0, std));
  }
  return net;
}

template <typename T>
std::vector<LayerSpec> Mlp<T>::spec() const {
  std::vector<LayerSpec> s;
  for (const auto& l : layers_)
    s.push_back({l.w.cols, l.w.rows, l.act, static_cast<double>(l.act_scale)});
  return s;
}

template <typename T>
std::size_t Mlp<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

template <typename T>
const Mat<T>& Mlp<T>::forward(const Mat<T>& x, Cache<T>& cache) const {
  if (x.cols != input_dim())
    throw util::ConfigError("forward: input dim " + std::to_string(x.cols) +
                            " != " + std::to_string(input_dim()));
  cache.acts.resize(layers_.size() + 1);
  cache.acts[0] = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    Mat<T>& out = cache.acts[li + 1];
    if (out.rows != x.rows || out.cols != l.w.rows)
      out.resize(x.rows, l.w.rows);
    detail::lin_fwd(cache.acts[li].data(), l.w.data(), l.b.data(), out.data(),
                    x.rows, l.w.cols, l.w.rows);
    detail::act_fwd(l.act, out.data(), out.size(), l.act_scale);
  }
  return cache.acts.back();
}

template <typename T>
void Mlp<T>::backward(Cache<T>& cache, const Mat<T>& dy, Grads<T>& g,
                      Mat<T>* dx) const {
  if (cache.acts.size() != layers_.size() + 1 ||
      dy.rows != cache.acts.back().rows || dy.cols != cache.acts.back().cols)
    throw util::ConfigError("backward: cache does not match forward call");
  Mat<T>* cur = &cache.scratch_a;
  Mat<T>* nxt = &cache.scratch_b;
  *cur = dy;
  for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
    const auto& l = layers_[li];
    const Mat<T>& a_out = cache.acts[li + 1];
    const Mat<T>& a_in = cache.acts[li];
    detail::act_bwd(l.act, a_out.data(), cur->data(), cur->size(),
                    l.act_scale);
    detail::lin_bwd_params(a_in.data(), cur->data(), g.w[li].data(),
                           g.b[li].data(), a_in.rows, l.w.cols, l.w.rows);
    if (li > 0 || dx) {
      Mat<T>* target = (li == 0) ? dx : nxt;
      if (target->rows != a_in.rows || target->cols != a_in.cols)
        target->resize(a_in.rows, a_in.cols);
      detail::lin_bwd_input(cur->data(), l.w.data(), target->data(), a_in.rows,
                            l.w.cols, l.w.rows);
      if (li > 0) std::swap(cur, nxt);
    }
  }
}

template <typename T>
Grads<T> Mlp<T>::make_grads() const {
  Grads<T> g;
  for (const auto& l : layers_) {
    g.w.emplace_back(l.w.rows, l.w.cols);
    g.b.emplace_back(l.b.size(), T(0));
  }
  return g;
}

template <typename T>
std::vector<std::span<T>> Mlp<T>::param_blobs() {
  std::vector<std::span<T>> out;
  for (auto& l : layers_) {
    out.emplace_back(l.w.v);
    out.emplace_back(l.b);
  }
  return out;
}

template <typename T>
std::vector<std::span<const T>> Mlp<T>::param_blobs() const {
  std::vector<std::span<const T>> out;
  for (const auto& l : layers_) {
    out.emplace_back(l.w.v);
    out.emplace_back(l.b);
  }
  return out;
}

template <typename T>
T l1_loss(const Mat<T>& pred, const Mat<T>& target, Mat<T>* grad) {
  if (pred.size() == 0) throw util::ConfigError("l1_loss: empty input");
  if (pred.rows != target.rows || pred.cols != target.cols)
    throw util::ConfigError("l1_loss: shape mismatch");
  const T inv = T(1) / static_cast<T>(pred.size());
  if (grad && (grad->rows != pred.rows || grad->cols != pred.cols))
    grad->resize(pred.rows, pred.cols);
  T acc = T(0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred.v[i] - target.v[i];
    acc += d > T(0) ? d : -d;
    if (grad) grad->v[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
  return acc * inv;
}

template <typename T>
std::vector<double> param_delta(const Mlp<T>& before, const Mlp<T>& after) {
  const auto& lb = before.layers();
  const auto& la = after.layers();
  if (lb.size() != la.size())
    throw util::ConfigError("param_delta: architecture mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i < lb.size(); ++i) {
    if (lb[i].w.rows != la[i].w.rows || lb[i].w.cols != la[i].w.cols)
      throw util::ConfigError("param_delta: architecture mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < lb[i].w.size(); ++k)
      acc += std::abs(static_cast<double>(la[i].w.v[k]) - lb[i].w.v[k]);
    for (std::size_t k = 0; k < lb[i].b.size(); ++k)
      acc += std::abs(static_cast<double>(la[i].b[k]) - lb[i].b[k]);
    out.push_back(acc / (lb[i].w.size() + lb[i].b.size()));
  }
  return out;
}

}  // namespace pidmrl::nn
