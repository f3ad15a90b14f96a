#pragma once

#include <string>

#include "sot3d/nn/params.hpp"
#include "sot3d/track/config.hpp"

namespace sot3d::track {

inline std::string stage_prefix(int stage) { return "stage" + std::to_string(stage) + "."; }

// Registers every trainable tensor for the cascade. Weight matrices are
// stored [in x out]; conv kernels [out x (taps*in)].
inline nn::Parameters create_parameters(const TrackerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t F = static_cast<std::size_t>(cfg.feature_width);
  nn::Parameters p(seed);
  p.set_config_hash(config_hash(cfg));

  p.add("backbone.ec1.w", 6, F, 6);
  p.add("backbone.ec1.b", 1, F, 6);
  p.add("backbone.ec2.w", 2 * F, F, 2 * F);
  p.add("backbone.ec2.b", 1, F, 2 * F);

  for (int s = 1; s <= cfg.stages; ++s) {
    const std::string sp = stage_prefix(s);
    p.add(sp + "spt.posemb.w", 3, F, 3);
    p.add(sp + "spt.posemb.b", 1, F, 3);
    p.add(sp + "spt.maskemb.w", 1, F, 1);
    p.add(sp + "spt.maskemb.b", 1, F, 1);
    for (int l = 1; l <= cfg.spt_layers; ++l) {
      const std::string lp = sp + "spt.layer" + std::to_string(l) + ".";
      for (const char* block : {"cross.", "self."}) {
        p.add(lp + block + "wq", F, F, F);
        p.add(lp + block + "wk", F, F, F);
        p.add(lp + block + "wv", F, F, F);
      }
      p.add_constant(lp + "ln1.gain", 1, F, 1.0);
      p.add_constant(lp + "ln1.bias", 1, F, 0.0);
      p.add_constant(lp + "ln2.gain", 1, F, 1.0);
      p.add_constant(lp + "ln2.bias", 1, F, 0.0);
      p.add(lp + "ffn.w1", F, 2 * F, F);
      p.add(lp + "ffn.b1", 1, 2 * F, F);
      p.add(lp + "ffn.w2", 2 * F, F, 2 * F);
      p.add(lp + "ffn.b2", 1, F, 2 * F);
      p.add_constant(lp + "ln3.gain", 1, F, 1.0);
      p.add_constant(lp + "ln3.bias", 1, F, 0.0);
    }
    p.add(sp + "head.w1", F, F, F);
    p.add(sp + "head.b1", 1, F, F);
    p.add(sp + "head.w2", F, 5, F);
    p.add(sp + "head.b2", 1, 5, F);
    p.add(sp + "ftb.mlp.w", 4, F, 4);
    p.add(sp + "ftb.mlp.b", 1, F, 4);
    p.add(sp + "ftb.ec.w", 2 * F, F, 2 * F);
    p.add(sp + "ftb.ec.b", 1, F, 2 * F);
    p.add(sp + "ftb.conv3d.w", F, 27 * F, 27 * F);
    p.add(sp + "ftb.conv3d.b", 1, F, 27 * F);
    p.add(sp + "ftb.conv1d.w", F, static_cast<std::size_t>(cfg.conv1d_width),
          static_cast<std::size_t>(cfg.conv1d_width));
    p.add(sp + "ftb.conv1d.b", 1, F, static_cast<std::size_t>(cfg.conv1d_width));
  }

  p.add("final.w1", F, F, F);
  p.add("final.b1", 1, F, F);
  p.add("final.w2", F, 10, F);
  p.add("final.b2", 1, 10, F);
  return p;
}

}  // namespace sot3d::track
