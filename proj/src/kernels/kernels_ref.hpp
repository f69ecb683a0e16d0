#pragma once

// Reference kernel implementations, templated on the scalar type. The f32
// scalar kernels delegate here, and the f64 network path (used by the
// finite-difference oracle suites) uses these directly, so both precisions
// share one definition of the semantics.

#include <cmath>
#include <cstddef>

namespace pidmrl::kern::ref {

template <typename T>
void linear_forward(const T* x, const T* w, const T* b, T* y,
                    int n, int in, int out) {
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<std::size_t>(i) * in;
    T* yi = y + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      const T* wo = w + static_cast<std::size_t>(o) * in;
      T acc = b ? b[o] : T(0);
      for (int k = 0; k < in; ++k) acc += wo[k] * xi[k];
      yi[o] = acc;
    }
  }
}

template <typename T>
void linear_backward_input(const T* dy, const T* w, T* dx,
                           int n, int in, int out) {
  for (int i = 0; i < n; ++i) {
    const T* dyi = dy + static_cast<std::size_t>(i) * out;
    T* dxi = dx + static_cast<std::size_t>(i) * in;
    for (int k = 0; k < in; ++k) dxi[k] = T(0);
    for (int o = 0; o < out; ++o) {
      const T g = dyi[o];
      const T* wo = w + static_cast<std::size_t>(o) * in;
      for (int k = 0; k < in; ++k) dxi[k] += g * wo[k];
    }
  }
}

template <typename T>
void linear_backward_params(const T* x, const T* dy, T* dw, T* db,
                            int n, int in, int out) {
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<std::size_t>(i) * in;
    const T* dyi = dy + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      const T g = dyi[o];
      db[o] += g;
      T* dwo = dw + static_cast<std::size_t>(o) * in;
      for (int k = 0; k < in; ++k) dwo[k] += g * xi[k];
    }
  }
}

template <typename T>
double sum_squares(const T* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    acc += v * v;
  }
  return acc;
}

template <typename T>
void adam_step(T* p, const T* g, T* m, T* v, std::size_t n,
               T lr, T beta1, T beta2, T eps, T c1, T c2, T weight_decay) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mhat = m[i] * c1;
    const T vhat = v[i] * c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

template <typename T>
void elu_forward(const T* z, T* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    a[i] = z[i] > T(0) ? z[i] : std::expm1(z[i]);
}

// d(elu)/dz recovered from the activation: exp(z) = a + 1 for z < 0.
template <typename T>
void elu_backward_from_act(const T* a, const T* dy, T* dz, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    dz[i] = dy[i] * (a[i] > T(0) ? T(1) : a[i] + T(1));
}

template <typename T>
void sig_span_forward(const T* z, T* a, std::size_t n, T s) {
  for (std::size_t i = 0; i < n; ++i) {
    const T sg = T(1) / (T(1) + std::exp(-z[i]));
    a[i] = s * (T(2) * sg - T(1));
  }
}

// da/dz = 2*s*sig*(1-sig) = s/2 * (1 - (a/s)^2), recovered from a.
template <typename T>
void sig_span_backward_from_act(const T* a, const T* dy, T* dz,
                                std::size_t n, T s) {
  for (std::size_t i = 0; i < n; ++i) {
    const T r = a[i] / s;
    dz[i] = dy[i] * (s * (T(1) - r * r) / T(2));
  }
}

}  // namespace pidmrl::kern::ref
