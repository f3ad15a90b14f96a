#pragma once

#include <vector>

#include "sot3d/geom/fps.hpp"
#include "sot3d/nn/edge_conv.hpp"
#include "sot3d/track/model.hpp"

namespace sot3d::track {

inline std::vector<Vec3> points_from_tensor(const nn::Tensor& t) {
  if (t.cols() != 3) throw ShapeError("points_from_tensor: expected [N x 3]");
  std::vector<Vec3> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out[i] = Vec3{t.values()[i * 3], t.values()[i * 3 + 1], t.values()[i * 3 + 2]};
  }
  return out;
}

// FPS-normalized resampling to exactly P points: subsample when larger,
// reorder when equal, cycle the FPS ordering as padding when smaller.
inline std::vector<Vec3> resample_points(const PointSet& points, std::size_t target) {
  if (points.empty()) throw std::invalid_argument("resample_points: empty input");
  const std::size_t n = points.size();
  std::vector<std::size_t> order =
      farthest_point_sampling(points, std::min(n, target));
  std::vector<Vec3> out;
  out.reserve(target);
  for (std::size_t j = 0; j < target; ++j) out.push_back(points[order[j % order.size()]]);
  return out;
}

struct BackboneOut {
  std::vector<Vec3> coords;
  nn::Tensor coords_t;   // [P x 3] constant
  nn::Tensor features;   // [P x F]
};

// Crop is assumed non-empty. Input features are coordinates relative to the
// region center; two EdgeConv layers lift them to F channels.
inline BackboneOut backbone_forward(nn::Tape* tape, const PointSet& crop, const Vec3& region_center,
                                    const TrackerConfig& cfg, nn::Parameters& params) {
  BackboneOut out;
  out.coords = resample_points(crop, static_cast<std::size_t>(cfg.search_points));
  out.coords_t = nn::Tensor::from_points(out.coords);

  std::vector<Vec3> rel(out.coords.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = out.coords[i] - region_center;
  nn::Tensor x = nn::Tensor::from_points(rel);

  const std::size_t k = static_cast<std::size_t>(cfg.knn);
  x = nn::edge_conv(tape, x, out.coords, k, params.at("backbone.ec1.w"),
                    params.at("backbone.ec1.b"));
  x = nn::edge_conv(tape, x, out.coords, k, params.at("backbone.ec2.w"),
                    params.at("backbone.ec2.b"));
  out.features = x;
  return out;
}

}  // namespace sot3d::track
