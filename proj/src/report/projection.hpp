#pragma once

// Two-component linear projection of proprioception clouds onto their
// principal axes, used to compare dataset coverage across sources. The
// projection is fitted on the union of all inputs.

#include <array>
#include <string>
#include <vector>

namespace pidmrl::report {

struct Projection2D {
  std::array<double, 4> mean{};
  std::array<std::array<double, 4>, 2> axes{};  // row = component

  std::array<double, 2> apply(const std::array<double, 4>& x) const;
};

// points: one flat vector of 4-dim rows per dataset.
Projection2D fit_projection(const std::vector<std::vector<double>>& datasets);

void project_to_csv(const Projection2D& proj,
                    const std::vector<std::vector<double>>& datasets,
                    const std::vector<std::string>& labels,
                    const std::string& path);

}  // namespace pidmrl::report
