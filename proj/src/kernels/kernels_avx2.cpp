// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2; it is reached solely through the runtime dispatch in
// kernels.cpp. Sample blocks of four amortize the weight-matrix traffic,
// which is what these loops are bound by at MLP sizes.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernels/kernels.hpp"

namespace pidmrl::kern::detail {

namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

}  // namespace

void linear_forward_avx2(const float* x, const float* w, const float* b,
                         float* y, int n, int in, int out) {
  const int in8 = in & ~7;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const float* x0 = x + static_cast<std::size_t>(i) * in;
    const float* x1 = x0 + in;
    const float* x2 = x1 + in;
    const float* x3 = x2 + in;
    for (int o = 0; o < out; ++o) {
      const float* wo = w + static_cast<std::size_t>(o) * in;
      __m256 a0 = _mm256_setzero_ps(), a1 = _mm256_setzero_ps();
      __m256 a2 = _mm256_setzero_ps(), a3 = _mm256_setzero_ps();
      for (int k = 0; k < in8; k += 8) {
        const __m256 wv = _mm256_loadu_ps(wo + k);
        a0 = _mm256_fmadd_ps(wv, _mm256_loadu_ps(x0 + k), a0);
        a1 = _mm256_fmadd_ps(wv, _mm256_loadu_ps(x1 + k), a1);
        a2 = _mm256_fmadd_ps(wv, _mm256_loadu_ps(x2 + k), a2);
        a3 = _mm256_fmadd_ps(wv, _mm256_loadu_ps(x3 + k), a3);
      }
      float s0 = hsum8(a0), s1 = hsum8(a1), s2 = hsum8(a2), s3 = hsum8(a3);
      for (int k = in8; k < in; ++k) {
        const float wv = wo[k];
        s0 += wv * x0[k];
        s1 += wv * x1[k];
        s2 += wv * x2[k];
        s3 += wv * x3[k];
      }
      const float bo = b ? b[o] : 0.0f;
      y[static_cast<std::size_t>(i) * out + o] = bo + s0;
      y[static_cast<std::size_t>(i + 1) * out + o] = bo + s1;
      y[static_cast<std::size_t>(i + 2) * out + o] = bo + s2;
      y[static_cast<std::size_t>(i + 3) * out + o] = bo + s3;
    }
  }
  for (; i < n; ++i) {
    const float* xi = x + static_cast<std::size_t>(i) * in;
    float* yi = y + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      const float* wo = w + static_cast<std::size_t>(o) * in;
      __m256 acc = _mm256_setzero_ps();
      for (int k = 0; k < in8; k += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(wo + k),
                              _mm256_loadu_ps(xi + k), acc);
      float s = hsum8(acc);
      for (int k = in8; k < in; ++k) s += wo[k] * xi[k];
      yi[o] = (b ? b[o] : 0.0f) + s;
    }
  }
}

void linear_backward_input_avx2(const float* dy, const float* w, float* dx,
                                int n, int in, int out) {
  const int in8 = in & ~7;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    float* d0 = dx + static_cast<std::size_t>(i) * in;
    float* d1 = d0 + in;
    float* d2 = d1 + in;
    float* d3 = d2 + in;
    for (int k = 0; k < in; ++k) d0[k] = d1[k] = d2[k] = d3[k] = 0.0f;
    const float* g0 = dy + static_cast<std::size_t>(i) * out;
    const float* g1 = g0 + out;
    const float* g2 = g1 + out;
    const float* g3 = g2 + out;
    for (int o = 0; o < out; ++o) {
      const float* wo = w + static_cast<std::size_t>(o) * in;
      const __m256 s0 = _mm256_set1_ps(g0[o]);
      const __m256 s1 = _mm256_set1_ps(g1[o]);
      const __m256 s2 = _mm256_set1_ps(g2[o]);
      const __m256 s3 = _mm256_set1_ps(g3[o]);
      for (int k = 0; k < in8; k += 8) {
        const __m256 wv = _mm256_loadu_ps(wo + k);
        _mm256_storeu_ps(d0 + k,
                         _mm256_fmadd_ps(s0, wv, _mm256_loadu_ps(d0 + k)));
        _mm256_storeu_ps(d1 + k,
                         _mm256_fmadd_ps(s1, wv, _mm256_loadu_ps(d1 + k)));
        _mm256_storeu_ps(d2 + k,
                         _mm256_fmadd_ps(s2, wv, _mm256_loadu_ps(d2 + k)));
        _mm256_storeu_ps(d3 + k,
                         _mm256_fmadd_ps(s3, wv, _mm256_loadu_ps(d3 + k)));
      }
      for (int k = in8; k < in; ++k) {
        d0[k] += g0[o] * wo[k];
        d1[k] += g1[o] * wo[k];
        d2[k] += g2[o] * wo[k];
        d3[k] += g3[o] * wo[k];
      }
    }
  }
  for (; i < n; ++i) {
    float* di = dx + static_cast<std::size_t>(i) * in;
    for (int k = 0; k < in; ++k) di[k] = 0.0f;
    const float* gi = dy + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      const float* wo = w + static_cast<std::size_t>(o) * in;
      const __m256 s = _mm256_set1_ps(gi[o]);
      for (int k = 0; k < in8; k += 8)
        _mm256_storeu_ps(di + k,
                         _mm256_fmadd_ps(s, _mm256_loadu_ps(wo + k),
                                         _mm256_loadu_ps(di + k)));
      for (int k = in8; k < in; ++k) di[k] += gi[o] * wo[k];
    }
  }
}

void linear_backward_params_avx2(const float* x, const float* dy, float* dw,
                                 float* db, int n, int in, int out) {
  const int in8 = in & ~7;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const float* x0 = x + static_cast<std::size_t>(i) * in;
    const float* x1 = x0 + in;
    const float* x2 = x1 + in;
    const float* x3 = x2 + in;
    const float* g0 = dy + static_cast<std::size_t>(i) * out;
    const float* g1 = g0 + out;
    const float* g2 = g1 + out;
    const float* g3 = g2 + out;
    for (int o = 0; o < out; ++o) {
      db[o] += g0[o] + g1[o] + g2[o] + g3[o];
      float* dwo = dw + static_cast<std::size_t>(o) * in;
      const __m256 s0 = _mm256_set1_ps(g0[o]);
      const __m256 s1 = _mm256_set1_ps(g1[o]);
      const __m256 s2 = _mm256_set1_ps(g2[o]);
      const __m256 s3 = _mm256_set1_ps(g3[o]);
      for (int k = 0; k < in8; k += 8) {
        __m256 acc = _mm256_loadu_ps(dwo + k);
        acc = _mm256_fmadd_ps(s0, _mm256_loadu_ps(x0 + k), acc);
        acc = _mm256_fmadd_ps(s1, _mm256_loadu_ps(x1 + k), acc);
        acc = _mm256_fmadd_ps(s2, _mm256_loadu_ps(x2 + k), acc);
        acc = _mm256_fmadd_ps(s3, _mm256_loadu_ps(x3 + k), acc);
        _mm256_storeu_ps(dwo + k, acc);
      }
      for (int k = in8; k < in; ++k)
        dwo[k] += g0[o] * x0[k] + g1[o] * x1[k] + g2[o] * x2[k] + g3[o] * x3[k];
    }
  }
  for (; i < n; ++i) {
    const float* xi = x + static_cast<std::size_t>(i) * in;
    const float* gi = dy + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      db[o] += gi[o];
      float* dwo = dw + static_cast<std::size_t>(o) * in;
      const __m256 s = _mm256_set1_ps(gi[o]);
      for (int k = 0; k < in8; k += 8)
        _mm256_storeu_ps(dwo + k,
                         _mm256_fmadd_ps(s, _mm256_loadu_ps(xi + k),
                                         _mm256_loadu_ps(dwo + k)));
      for (int k = in8; k < in; ++k) dwo[k] += gi[o] * xi[k];
    }
  }
}

double sum_squares_avx2(const float* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    acc0 = _mm256_fmadd_pd(lo, lo, acc0);
    acc1 = _mm256_fmadd_pd(hi, hi, acc1);
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc);
  double s = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; ++i) s += static_cast<double>(x[i]) * x[i];
  return s;
}

void adam_step_avx2(float* p, const float* g, float* m, float* v,
                    std::size_t n, float lr, float beta1, float beta2,
                    float eps, float c1, float c2, float weight_decay) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 v1mb1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 v1mb2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vc1 = _mm256_set1_ps(c1);
  const __m256 vc2 = _mm256_set1_ps(c2);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vwd = _mm256_set1_ps(weight_decay);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gi = _mm256_loadu_ps(g + i);
    __m256 mi = _mm256_loadu_ps(m + i);
    __m256 vi = _mm256_loadu_ps(v + i);
    mi = _mm256_add_ps(_mm256_mul_ps(vb1, mi), _mm256_mul_ps(v1mb1, gi));
    vi = _mm256_add_ps(_mm256_mul_ps(vb2, vi),
                       _mm256_mul_ps(v1mb2, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_mul_ps(mi, vc1);
    const __m256 vhat = _mm256_mul_ps(vi, vc2);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    __m256 pi = _mm256_loadu_ps(p + i);
    const __m256 upd = _mm256_add_ps(_mm256_div_ps(mhat, denom),
                                     _mm256_mul_ps(vwd, pi));
    pi = _mm256_sub_ps(pi, _mm256_mul_ps(vlr, upd));
    _mm256_storeu_ps(p + i, pi);
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    const float mhat = m[i] * c1;
    const float vhat = v[i] * c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

}  // namespace pidmrl::kern::detail
