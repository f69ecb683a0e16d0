#pragma once

// Dense f32 compute kernels used by the network engine. Every kernel has a
// scalar reference implementation and may have an AVX2 variant; the variant
// is picked once at startup from CPU capabilities. Set PIDMRL_KERNELS to
// "scalar" or "avx2" to override the automatic choice.

#include <cstddef>

namespace pidmrl::kern {

enum class Isa { Scalar, Avx2 };

// Resolved once per process; stable for the lifetime of the run.
Isa active_isa();
const char* isa_name(Isa isa);

// y[n x out] = x[n x in] * w[out x in]^T + b[out]   (row-major throughout)
void linear_forward(const float* x, const float* w, const float* b, float* y,
                    int n, int in, int out);

// dx[n x in] = dy[n x out] * w[out x in]
void linear_backward_input(const float* dy, const float* w, float* dx,
                           int n, int in, int out);

// dw[out x in] += dy^T * x,  db[out] += column sums of dy
void linear_backward_params(const float* x, const float* dy, float* dw,
                            float* db, int n, int in, int out);

// Sum of squares, accumulated in double.
double sum_squares(const float* x, std::size_t n);

void scale_inplace(float* x, std::size_t n, float s);

// Adam / AdamW step on one parameter blob. c1 = 1/(1-beta1^t),
// c2 = 1/(1-beta2^t) are the bias corrections for the current step count.
// weight_decay is decoupled (AdamW); pass 0 for plain Adam.
void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps,
               float c1, float c2, float weight_decay);

// Elementwise activations. Scalar only: their cost is noise next to the
// matrix kernels, and transcendentals vectorize poorly without changing
// numerics.
void elu_forward(const float* z, float* a, std::size_t n);
void elu_backward_from_act(const float* a, const float* dy, float* dz,
                           std::size_t n);
// a = s * (2*sigmoid(z) - 1), a in (-s, s)
void sig_span_forward(const float* z, float* a, std::size_t n, float s);
void sig_span_backward_from_act(const float* a, const float* dy, float* dz,
                                std::size_t n, float s);

namespace detail {
void linear_forward_avx2(const float* x, const float* w, const float* b,
                         float* y, int n, int in, int out);
void linear_backward_input_avx2(const float* dy, const float* w, float* dx,
                                int n, int in, int out);
void linear_backward_params_avx2(const float* x, const float* dy, float* dw,
                                 float* db, int n, int in, int out);
double sum_squares_avx2(const float* x, std::size_t n);
void adam_step_avx2(float* p, const float* g, float* m, float* v,
                    std::size_t n, float lr, float beta1, float beta2,
                    float eps, float c1, float c2, float weight_decay);
}  // namespace detail

}  // namespace pidmrl::kern
