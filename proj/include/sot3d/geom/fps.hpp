#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sot3d/geom/vec3.hpp"

namespace sot3d {

// Greedy farthest point sampling. The first selected index is `start`; each
// following pick maximizes the minimum distance to everything selected so
// far, ties broken by the lowest index. Deterministic.
inline std::vector<std::size_t> farthest_point_sampling(const PointSet& points, std::size_t m,
                                                        std::size_t start = 0) {
  const std::size_t n = points.size();
  if (m < 1 || m > n)
    throw std::invalid_argument("farthest_point_sampling: need 1 <= m <= point count");
  if (start >= n)
    throw std::invalid_argument("farthest_point_sampling: start index out of range");

  std::vector<std::size_t> selected;
  selected.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::size_t current = start;
  selected.push_back(current);
  chosen[current] = 1;
  while (selected.size() < m) {
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = norm2(points[i] - points[current]);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (!chosen[i] && min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
    selected.push_back(current);
    chosen[current] = 1;
  }
  return selected;
}

}  // namespace sot3d
