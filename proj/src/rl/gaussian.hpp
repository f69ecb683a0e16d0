#pragma once

// Diagonal Gaussian policy head: sampling, log densities, entropy, and the
// minibatch KL used by the adaptive learning rate rule.

#include <span>
#include <vector>

#include "util/rng.hpp"

namespace pidmrl::rl {

// log N(a | mu, diag(sigma^2)), summed over dimensions.
double gaussian_log_prob(std::span<const double> a, std::span<const double> mu,
                         std::span<const double> sigma);

// Closed-form entropy: sum_d (0.5 * ln(2*pi*e) + ln sigma_d).
double gaussian_entropy(std::span<const double> sigma);

// Exact KL(old || new) for diagonal Gaussians, averaged over the rows of
// mu_old/mu_new (n x d, row-major). Reference for tests.
double gaussian_kl_exact(std::span<const double> mu_old,
                         std::span<const double> sigma_old,
                         std::span<const double> mu_new,
                         std::span<const double> sigma_new, int n, int d);

// The adaptive-rule KL estimate: per sample, sum over dims of
//   log(sigma_new / (sigma_old + 1e-5))
//   + (sigma_old^2 + (mu_old - mu_new)^2) / (2 sigma_new^2) - 1/2,
// averaged over the minibatch. The 1e-5 inside the log makes the value of
// two identical distributions slightly negative; that offset is part of the
// rule and is kept as-is.
double gaussian_kl_adaptive(std::span<const double> mu_old,
                            std::span<const double> sigma_old,
                            std::span<const double> mu_new,
                            std::span<const double> sigma_new, int n, int d);

// Learning-rate adaptation: divide when KL overshoots 2x the target, grow
// when it undershoots half of it, clamp to [1e-5, 1e-2].
double adapt_learning_rate(double lr, double kl, double kl_target,
                           double ratio);

inline constexpr double kLrFloor = 1e-5;
inline constexpr double kLrCeil = 1e-2;

}  // namespace pidmrl::rl
