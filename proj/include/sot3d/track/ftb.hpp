#pragma once

#include <vector>

#include "sot3d/nn/edge_conv.hpp"
#include "sot3d/nn/voxel.hpp"
#include "sot3d/track/backbone.hpp"
#include "sot3d/track/spt.hpp"

namespace sot3d::track {

inline nn::VoxelGrid search_grid(const Vec3& region_center, double region_half, std::size_t g) {
  if (!(region_half > 0.0)) {
    throw std::invalid_argument("search_grid: degenerate search region extent");
  }
  nn::VoxelGrid grid;
  grid.g = g;
  grid.cell = 2.0 * region_half / static_cast<double>(g);
  grid.origin = region_center - Vec3{region_half, region_half, region_half};
  return grid;
}

// Feature transformation block: an MLP over (relative vote, mask prob), an
// EdgeConv over the vote graph, and a voxel branch (scatter-mean, one 3x3x3
// convolution, trilinear gather back to the votes) added residually. A
// zero-initialized convolution therefore reproduces the EdgeConv branch.
inline nn::Tensor ftb_forward(nn::Tape* tape, const nn::Tensor& votes,
                              const std::vector<Vec3>& vote_values, const nn::Tensor& mask_probs,
                              const Vec3& region_center, double region_half,
                              const TrackerConfig& cfg, nn::Parameters& params, int stage) {
  const std::string sp = stage_prefix(stage);
  const nn::Tensor rel = nn::sub_rowvec(tape, votes, rowvec3(region_center));
  const nn::Tensor pin = nn::concat_cols(tape, rel, mask_probs);
  const nn::Tensor lifted =
      nn::relu(tape, nn::linear(tape, pin, params.at(sp + "ftb.mlp.w"), params.at(sp + "ftb.mlp.b")));
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.knn),
                                              vote_values.size() - 1);
  const nn::Tensor ec =
      nn::edge_conv(tape, lifted, vote_values, k, params.at(sp + "ftb.ec.w"), params.at(sp + "ftb.ec.b"));

  const nn::VoxelGrid grid =
      search_grid(region_center, region_half, static_cast<std::size_t>(cfg.voxel_grid));
  std::vector<std::size_t> cells(vote_values.size());
  for (std::size_t i = 0; i < vote_values.size(); ++i) cells[i] = grid.cell_index(vote_values[i]);
  const nn::Tensor vox = nn::voxel_scatter_mean(tape, ec, cells, grid);
  const nn::Tensor conv =
      nn::conv3d(tape, vox, params.at(sp + "ftb.conv3d.w"), params.at(sp + "ftb.conv3d.b"), grid.g);
  const nn::Tensor gathered = nn::trilinear_gather(tape, conv, votes, grid);
  return nn::add(tape, ec, gathered);
}

}  // namespace sot3d::track
