#pragma once

#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/sequence.hpp"

namespace sot3d::bench {

// Re-emits the first-frame box for every later frame.
inline std::vector<ResultRow> baseline_static(const Sequence& seq, const Box9DoF& first_box) {
  std::vector<ResultRow> rows;
  for (int t = 2; t <= seq.num_frames(); ++t) rows.push_back(ResultRow{t, first_box, 1.0});
  return rows;
}

// Moves the box to the centroid of the points inside the scaled previous
// box; size and orientation never change. Empty crops keep the previous box.
inline std::vector<ResultRow> baseline_centroid(const Sequence& seq, const Box9DoF& first_box,
                                                double scale = 2.0) {
  std::vector<ResultRow> rows;
  Box9DoF prev = first_box;
  for (int t = 2; t <= seq.num_frames(); ++t) {
    const CropResult crop = crop_points(seq.cloud(t), prev, scale);
    if (!crop.points.empty()) {
      Vec3 mean{0.0, 0.0, 0.0};
      for (const Vec3& p : crop.points) mean = mean + p;
      mean = mean * (1.0 / static_cast<double>(crop.points.size()));
      prev = Box9DoF(mean, prev.size, prev.angles);
    }
    rows.push_back(ResultRow{t, prev, 1.0});
  }
  return rows;
}

}  // namespace sot3d::bench
