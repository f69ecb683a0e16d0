#include "report/projection.hpp"

#include <algorithm>
#include <cmath>

#include "util/csv.hpp"
#include "util/errors.hpp"

namespace pidmrl::report {

namespace {

// Jacobi eigendecomposition for a symmetric 4x4; plenty for this use.
void symmetric_eigen4(std::array<std::array<double, 4>, 4> a,
                      std::array<double, 4>& eval,
                      std::array<std::array<double, 4>, 4>& evec) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) evec[i][j] = i == j ? 1.0 : 0.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        if (std::abs(a[p][q]) < 1e-30) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 4; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 4; ++k) {
          const double vkp = evec[k][p], vkq = evec[k][q];
          evec[k][p] = c * vkp - s * vkq;
          evec[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (int i = 0; i < 4; ++i) eval[i] = a[i][i];
}

}  // namespace

std::array<double, 2> Projection2D::apply(
    const std::array<double, 4>& x) const {
  std::array<double, 2> out{};
  for (int c = 0; c < 2; ++c) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += axes[c][k] * (x[k] - mean[k]);
    out[c] = acc;
  }
  return out;
}

Projection2D fit_projection(
    const std::vector<std::vector<double>>& datasets) {
  std::size_t total = 0;
  for (const auto& d : datasets) {
    if (d.size() % 4 != 0)
      throw util::ConfigError("projection: rows must be 4-dimensional");
    total += d.size() / 4;
  }
  if (total < 2) throw util::ConfigError("projection: too few points");

  Projection2D proj;
  for (const auto& d : datasets)
    for (std::size_t i = 0; i < d.size(); i += 4)
      for (int k = 0; k < 4; ++k) proj.mean[k] += d[i + k];
  for (int k = 0; k < 4; ++k) proj.mean[k] /= static_cast<double>(total);

  std::array<std::array<double, 4>, 4> cov{};
  for (const auto& d : datasets)
    for (std::size_t i = 0; i < d.size(); i += 4)
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          cov[r][c] += (d[i + r] - proj.mean[r]) * (d[i + c] - proj.mean[c]);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) cov[r][c] /= static_cast<double>(total);

  std::array<double, 4> eval{};
  std::array<std::array<double, 4>, 4> evec{};
  symmetric_eigen4(cov, eval, evec);

  // Two largest eigenvalues; sign fixed so the first nonzero entry is
  // positive, keeping reruns byte-identical.
  std::array<int, 4> order = {0, 1, 2, 3};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return eval[a] > eval[b]; });
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < 4; ++k) proj.axes[c][k] = evec[k][order[c]];
    for (int k = 0; k < 4; ++k) {
      if (std::abs(proj.axes[c][k]) > 1e-12) {
        if (proj.axes[c][k] < 0)
          for (int j = 0; j < 4; ++j) proj.axes[c][j] = -proj.axes[c][j];
        break;
      }
    }
  }
  return proj;
}

void project_to_csv(const Projection2D& proj,
                    const std::vector<std::vector<double>>& datasets,
                    const std::vector<std::string>& labels,
                    const std::string& path) {
  util::CsvWriter csv(path, {"dataset", "c1", "c2"});
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& v = datasets[d];
    for (std::size_t i = 0; i < v.size(); i += 4) {
      const auto p = proj.apply({v[i], v[i + 1], v[i + 2], v[i + 3]});
      csv.row({labels[d], util::format_double(p[0]),
               util::format_double(p[1])});
    }
  }
}

}  // namespace pidmrl::report
