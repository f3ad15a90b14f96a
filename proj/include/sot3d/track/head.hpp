#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/nn/ops.hpp"
#include "sot3d/track/model.hpp"

namespace sot3d::track {

// Channel layout of the final proposal table, matching the result-file box
// layout plus a trailing score logit.
inline constexpr std::size_t kProposalCols = 10;

// Final head: [D x F] -> [D x 10] rows of
// [dx, dy, dz, dw, dh, dl, dalpha, dbeta, dgamma, score].
inline nn::Tensor head_forward(nn::Tape* tape, const nn::Tensor& x, const TrackerConfig& cfg,
                               nn::Parameters& params) {
  const nn::Tensor hidden =
      nn::relu(tape, nn::linear(tape, x, params.at("final.w1"), params.at("final.b1")));
  nn::Tensor table = nn::linear(tape, hidden, params.at("final.w2"), params.at("final.b2"));
  if (!cfg.predict_full_rotation) {
    nn::Tensor keep(1, kProposalCols, 1.0);
    keep.mutable_values()[7] = 0.0;  // dbeta
    keep.mutable_values()[8] = 0.0;  // dgamma
    table = nn::mul_rowvec(tape, table, keep);
  }
  return table;
}

struct DecodedBox {
  Box9DoF box;
  double score = 0.0;
  std::size_t row = 0;
};

inline double sigmoid_value(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Applies the highest-scored row (ties keep the first) as an additive offset
// to the previous box; sizes are clamped to 0.01 m, angles rewrapped.
inline DecodedBox decode_box(const nn::Tensor& table, const Box9DoF& prev) {
  if (table.cols() != kProposalCols || table.rows() == 0) {
    throw ShapeError("decode_box: expected a non-empty [D x 10] table");
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < table.rows(); ++r) {
    if (table.at(r, 9) > table.at(best, 9)) best = r;
  }
  const auto v = [&](std::size_t c) { return table.at(best, c); };
  const Vec3 center = prev.center + Vec3{v(0), v(1), v(2)};
  const Vec3 size{std::max(prev.size.x + v(3), 0.01), std::max(prev.size.y + v(4), 0.01),
                  std::max(prev.size.z + v(5), 0.01)};
  const Vec3 angles{wrap_angle(prev.angles.x + v(6)), wrap_angle(prev.angles.y + v(7)),
                    wrap_angle(prev.angles.z + v(8))};
  return DecodedBox{Box9DoF(center, size, angles), sigmoid_value(v(9)), best};
}

}  // namespace sot3d::track
