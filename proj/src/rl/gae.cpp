#include "rl/gae.hpp"

#include <cmath>

namespace pidmrl::rl {

void compute_gae(std::span<const double> rewards,
                 std::span<const double> values,
                 std::span<const double> bootstrap,
                 std::span<const std::uint8_t> dones, int t_steps, int n_envs,
                 double gamma, double lambda, std::span<double> advantages,
                 std::span<double> returns) {
  for (int e = 0; e < n_envs; ++e) {
    double next_adv = 0.0;
    double next_value = bootstrap[e];
    for (int t = t_steps - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(t) * n_envs + e;
      const double not_done = dones[i] ? 0.0 : 1.0;
      const double delta =
          rewards[i] + gamma * not_done * next_value - values[i];
      next_adv = delta + gamma * lambda * not_done * next_adv;
      advantages[i] = next_adv;
      returns[i] = next_adv + values[i];
      next_value = values[i];
    }
  }
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (const double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (const double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double denom = std::sqrt(var) + 1e-8;
  for (double& a : adv) a = (a - mean) / denom;
}

}  // namespace pidmrl::rl
