#pragma once

#include <vector>

#include "sot3d/geom/fps.hpp"
#include "sot3d/track/ftb.hpp"

namespace sot3d::track {

struct StageOutput {
  nn::Tensor votes;         // [P_i x 3] input coords + predicted offsets
  nn::Tensor mask_logits;   // [P_i x 1]
  nn::Tensor score_logits;  // [P_i x 1]
  std::vector<Vec3> input_coords;
  std::vector<std::size_t> sampled;  // FPS selection over the votes
  nn::Tensor sampled_votes;          // [D x 3]
  std::vector<Vec3> sampled_coords;
  nn::Tensor x_next;  // [D x F] input features for the next stage
};

// One refinement stage: SPT attention over the memory bank, a shared head
// producing per-point offset/mask/score, FPS down to D votes, and the FTB
// plus a width-w 1D convolution of the score logits forming the next input.
inline StageOutput stage_forward(nn::Tape* tape, const nn::Tensor& x, const nn::Tensor& coords_t,
                                 const std::vector<Vec3>& coords, const MemoryView& mem,
                                 const Vec3& region_center, double region_half,
                                 const TrackerConfig& cfg, nn::Parameters& params, int stage) {
  const std::string sp = stage_prefix(stage);
  StageOutput out;
  out.input_coords = coords;

  const nn::Tensor feats = spt_forward(tape, x, coords_t, mem, region_center, cfg, params, stage);
  const nn::Tensor hidden =
      nn::relu(tape, nn::linear(tape, feats, params.at(sp + "head.w1"), params.at(sp + "head.b1")));
  const nn::Tensor table =
      nn::linear(tape, hidden, params.at(sp + "head.w2"), params.at(sp + "head.b2"));

  out.mask_logits = nn::slice_cols(tape, table, 3, 4);
  out.score_logits = nn::slice_cols(tape, table, 4, 5);
  out.votes = nn::add(tape, coords_t, nn::slice_cols(tape, table, 0, 3));

  const std::vector<Vec3> vote_values = points_from_tensor(out.votes);
  out.sampled = farthest_point_sampling(vote_values, static_cast<std::size_t>(cfg.sampled_points));
  out.sampled_votes = nn::gather_rows(tape, out.votes, out.sampled);
  out.sampled_coords = points_from_tensor(out.sampled_votes);

  const nn::Tensor mask_probs =
      nn::sigmoid(tape, nn::gather_rows(tape, out.mask_logits, out.sampled));
  const nn::Tensor ftb = ftb_forward(tape, out.sampled_votes, out.sampled_coords, mask_probs,
                                     region_center, region_half, cfg, params, stage);
  const nn::Tensor score_feat =
      nn::conv1d(tape, nn::gather_rows(tape, out.score_logits, out.sampled),
                 params.at(sp + "ftb.conv1d.w"), params.at(sp + "ftb.conv1d.b"),
                 static_cast<std::size_t>(cfg.conv1d_width));
  out.x_next = nn::add(tape, ftb, score_feat);
  return out;
}

}  // namespace sot3d::track
