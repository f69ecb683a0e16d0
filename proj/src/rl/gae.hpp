#pragma once

// Generalized advantage estimation over a [T x E] rollout, plus advantage
// normalization. All in double; tests compare against a brute-force
// discounted-sum oracle.

#include <cstdint>
#include <span>
#include <vector>

namespace pidmrl::rl {

// delta_t = r_t + gamma * (1 - done_t) * V_{t+1} - V_t
// A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// R_t     = A_t + V_t
// Arrays are [T x E] row-major; bootstrap is the value of the post-rollout
// state per environment (already zeroed for terminal last steps).
void compute_gae(std::span<const double> rewards,
                 std::span<const double> values,
                 std::span<const double> bootstrap,
                 std::span<const std::uint8_t> dones, int t_steps, int n_envs,
                 double gamma, double lambda, std::span<double> advantages,
                 std::span<double> returns);

// In-place (x - mean) / (std + 1e-8) with population std. A constant input
// maps to all zeros.
void normalize_advantages(std::span<double> adv);

}  // namespace pidmrl::rl
