#include "kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

#include "kernels/kernels_ref.hpp"

namespace pidmrl::kern {

namespace {

Isa resolve_isa() {
  const char* env = std::getenv("PIDMRL_KERNELS");
  if (env) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (std::strcmp(env, "avx2") == 0) return Isa::Avx2;
  }
#if defined(__x86_64__) || defined(__i386__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Isa::Avx2;
#endif
  return Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = resolve_isa();
  return isa;
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx2: return "avx2";
    default: return "scalar";
  }
}

void linear_forward(const float* x, const float* w, const float* b, float* y,
                    int n, int in, int out) {
  if (active_isa() == Isa::Avx2)
    return detail::linear_forward_avx2(x, w, b, y, n, in, out);
  ref::linear_forward(x, w, b, y, n, in, out);
}

void linear_backward_input(const float* dy, const float* w, float* dx,
                           int n, int in, int out) {
  if (active_isa() == Isa::Avx2)
    return detail::linear_backward_input_avx2(dy, w, dx, n, in, out);
  ref::linear_backward_input(dy, w, dx, n, in, out);
}

void linear_backward_params(const float* x, const float* dy, float* dw,
                            float* db, int n, int in, int out) {
  if (active_isa() == Isa::Avx2)
    return detail::linear_backward_params_avx2(x, dy, dw, db, n, in, out);
  ref::linear_backward_params(x, dy, dw, db, n, in, out);
}

double sum_squares(const float* x, std::size_t n) {
  if (active_isa() == Isa::Avx2) return detail::sum_squares_avx2(x, n);
  return ref::sum_squares(x, n);
}

void scale_inplace(float* x, std::size_t n, float s) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps,
               float c1, float c2, float weight_decay) {
  if (active_isa() == Isa::Avx2)
    return detail::adam_step_avx2(p, g, m, v, n, lr, beta1, beta2, eps, c1,
                                  c2, weight_decay);
  ref::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, c1, c2, weight_decay);
}

void elu_forward(const float* z, float* a, std::size_t n) {
  ref::elu_forward(z, a, n);
}

void elu_backward_from_act(const float* a, const float* dy, float* dz,
                           std::size_t n) {
  ref::elu_backward_from_act(a, dy, dz, n);
}

void sig_span_forward(const float* z, float* a, std::size_t n, float s) {
  ref::sig_span_forward(z, a, n, s);
}

void sig_span_backward_from_act(const float* a, const float* dy, float* dz,
                                std::size_t n, float s) {
  ref::sig_span_backward_from_act(a, dy, dz, n, s);
}

}  // namespace pidmrl::kern
