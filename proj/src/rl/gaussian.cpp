#include "rl/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pidmrl::rl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)
}

double gaussian_log_prob(std::span<const double> a, std::span<const double> mu,
                         std::span<const double> sigma) {
  double lp = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double z = (a[d] - mu[d]) / sigma[d];
    lp += -0.5 * z * z - std::log(sigma[d]) - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> sigma) {
  double h = 0.0;
  for (const double s : sigma) h += 0.5 * (kLog2Pi + 1.0) + std::log(s);
  return h;
}

double gaussian_kl_exact(std::span<const double> mu_old,
                         std::span<const double> sigma_old,
                         std::span<const double> mu_new,
                         std::span<const double> sigma_new, int n, int d) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double so = sigma_old[k], sn = sigma_new[k];
      const double dm = mu_old[i * d + k] - mu_new[i * d + k];
      acc += std::log(sn / so) + (so * so + dm * dm) / (2.0 * sn * sn) - 0.5;
    }
  }
  return acc / n;
}

double gaussian_kl_adaptive(std::span<const double> mu_old,
                            std::span<const double> sigma_old,
                            std::span<const double> mu_new,
                            std::span<const double> sigma_new, int n, int d) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double so = sigma_old[k], sn = sigma_new[k];
      const double dm = mu_old[i * d + k] - mu_new[i * d + k];
      acc += std::log(sn / (so + 1e-5)) +
             (so * so + dm * dm) / (2.0 * sn * sn) - 0.5;
    }
  }
  return acc / n;
}

double adapt_learning_rate(double lr, double kl, double kl_target,
                           double ratio) {
  if (kl > 2.0 * kl_target)
    return std::max(lr / ratio, kLrFloor);
  if (kl < 0.5 * kl_target)
    return std::min(lr * ratio, kLrCeil);
  return lr;
}

}  // namespace pidmrl::rl
