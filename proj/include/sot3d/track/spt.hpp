#pragma once

#include <deque>
#include <vector>

#include "sot3d/nn/ops.hpp"
#include "sot3d/track/model.hpp"

namespace sot3d::track {

// Concatenated memory bank: features, absolute coordinates and the 0/1
// target mask for every stored point.
struct MemoryView {
  nn::Tensor features;  // [M x F]
  nn::Tensor coords_t;  // [M x 3]
  nn::Tensor mask_col;  // [M x 1]
};

inline nn::Tensor rowvec3(const Vec3& v) {
  return nn::Tensor::from_values(1, 3, {v.x, v.y, v.z});
}

// Spatial transformer block: per layer, cross-attention from the search
// points into the memory bank, self-attention, and a feed-forward net, each
// with a residual connection and post layer norm. Positional embeddings come
// from coordinates relative to the region center; memory keys additionally
// carry a mask embedding.
inline nn::Tensor spt_forward(nn::Tape* tape, const nn::Tensor& x_in, const nn::Tensor& x_coords,
                              const MemoryView& mem, const Vec3& region_center,
                              const TrackerConfig& cfg, nn::Parameters& params, int stage) {
  const std::string sp = stage_prefix(stage);
  const nn::Tensor center = rowvec3(region_center);
  const nn::Tensor rel_q = nn::sub_rowvec(tape, x_coords, center);
  const nn::Tensor rel_m = nn::sub_rowvec(tape, mem.coords_t, center);
  const nn::Tensor pe_q =
      nn::linear(tape, rel_q, params.at(sp + "spt.posemb.w"), params.at(sp + "spt.posemb.b"));
  const nn::Tensor pe_m =
      nn::linear(tape, rel_m, params.at(sp + "spt.posemb.w"), params.at(sp + "spt.posemb.b"));
  const nn::Tensor me =
      nn::linear(tape, mem.mask_col, params.at(sp + "spt.maskemb.w"), params.at(sp + "spt.maskemb.b"));
  const nn::Tensor mem_in = nn::add(tape, nn::add(tape, mem.features, pe_m), me);

  nn::Tensor x = x_in;
  for (int l = 1; l <= cfg.spt_layers; ++l) {
    const std::string lp = sp + "spt.layer" + std::to_string(l) + ".";
    nn::Tensor q_in = nn::add(tape, x, pe_q);
    nn::Tensor cross = nn::attention(tape, nn::matmul(tape, q_in, params.at(lp + "cross.wq")),
                                     nn::matmul(tape, mem_in, params.at(lp + "cross.wk")),
                                     nn::matmul(tape, mem_in, params.at(lp + "cross.wv")));
    x = nn::layer_norm_rows(tape, nn::add(tape, x, cross), params.at(lp + "ln1.gain"),
                            params.at(lp + "ln1.bias"));
    nn::Tensor s_in = nn::add(tape, x, pe_q);
    nn::Tensor self = nn::attention(tape, nn::matmul(tape, s_in, params.at(lp + "self.wq")),
                                    nn::matmul(tape, s_in, params.at(lp + "self.wk")),
                                    nn::matmul(tape, s_in, params.at(lp + "self.wv")));
    x = nn::layer_norm_rows(tape, nn::add(tape, x, self), params.at(lp + "ln2.gain"),
                            params.at(lp + "ln2.bias"));
    nn::Tensor ffn = nn::linear(
        tape, nn::relu(tape, nn::linear(tape, x, params.at(lp + "ffn.w1"), params.at(lp + "ffn.b1"))),
        params.at(lp + "ffn.w2"), params.at(lp + "ffn.b2"));
    x = nn::layer_norm_rows(tape, nn::add(tape, x, ffn), params.at(lp + "ln3.gain"),
                            params.at(lp + "ln3.bias"));
  }
  return x;
}

}  // namespace sot3d::track
