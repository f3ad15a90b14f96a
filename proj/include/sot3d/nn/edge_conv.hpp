#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "sot3d/geom/vec3.hpp"
#include "sot3d/nn/ops.hpp"

namespace sot3d::nn {

// k nearest neighbors per point (self excluded), ties broken by lower index.
// Returned row-major: neighbor j of point i at [i*k + j], sorted by distance.
inline std::vector<std::size_t> knn_indices(const std::vector<Vec3>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  if (k == 0 || k >= n) {
    throw std::invalid_argument("knn_indices: need 0 < k < point count");
  }
  std::vector<std::size_t> out(n * k);
  std::vector<std::pair<double, std::size_t>> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[m++] = {norm2(pts[j] - pts[i]), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = dist[j].second;
  }
  return out;
}

// EdgeConv: per edge (i, j) compute relu(W [f_i, f_j - f_i] + b), then max
// over each point's k edges. Graph built from coords, features from `f`.
inline Tensor edge_conv(Tape* tape, const Tensor& f, const std::vector<Vec3>& coords,
                        std::size_t k, const Tensor& w, const Tensor& b) {
  if (f.rows() != coords.size()) {
    throw ShapeError("edge_conv: " + std::to_string(coords.size()) + " coords for features " +
                     detail::shape_str(f));
  }
  const std::vector<std::size_t> nbr = knn_indices(coords, k);
  std::vector<std::size_t> self(f.rows() * k);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < k; ++j) self[i * k + j] = i;
  }
  Tensor fi = gather_rows(tape, f, self);
  Tensor fj = gather_rows(tape, f, nbr);
  Tensor e = concat_cols(tape, fi, sub(tape, fj, fi));
  Tensor h = relu(tape, linear(tape, e, w, b));
  return group_max(tape, h, k);
}

}  // namespace sot3d::nn
