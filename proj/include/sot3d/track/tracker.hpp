#pragma once

#include <deque>
#include <vector>

#include "sot3d/io/sequence_io.hpp"
#include "sot3d/track/head.hpp"
#include "sot3d/track/stage.hpp"

namespace sot3d::track {

struct MemoryEntry {
  std::vector<Vec3> coords;
  nn::Tensor coords_t;
  nn::Tensor features;
  std::vector<double> mask;
};

// Sliding bank of the K most recent processed frames; oldest evicted first.
class TrackerMemory {
 public:
  explicit TrackerMemory(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::invalid_argument("TrackerMemory: capacity must be >= 1");
  }

  void push(MemoryEntry e) {
    entries_.push_back(std::move(e));
    if (entries_.size() > cap_) entries_.pop_front();
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  MemoryView view(nn::Tape* tape) const {
    if (entries_.empty()) throw std::logic_error("TrackerMemory::view: empty memory");
    std::vector<nn::Tensor> feats, coords;
    std::vector<double> mask;
    for (const MemoryEntry& e : entries_) {
      feats.push_back(e.features);
      coords.push_back(e.coords_t);
      mask.insert(mask.end(), e.mask.begin(), e.mask.end());
    }
    MemoryView v;
    v.features = nn::concat_rows(tape, feats);
    v.coords_t = nn::concat_rows(tape, coords);
    const std::size_t m = mask.size();
    v.mask_col = nn::Tensor::from_values(m, 1, std::move(mask));
    return v;
  }

 private:
  std::deque<MemoryEntry> entries_;
  std::size_t cap_;
};

inline std::vector<double> containment_mask(const Box9DoF& box, const std::vector<Vec3>& pts) {
  std::vector<double> m(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) m[i] = contains(box, pts[i]) ? 1.0 : 0.0;
  return m;
}

inline double region_half_extent(const Box9DoF& box, const TrackerConfig& cfg) {
  return 0.5 * cfg.region_scale * norm(box.size);
}

struct CascadeOutput {
  std::vector<StageOutput> stages;
  nn::Tensor final_table;
  BackboneOut backbone;
};

// Shared forward pass for tracking and training: backbone, N stages, head.
inline CascadeOutput cascade_forward(nn::Tape* tape, const PointSet& crop, const Box9DoF& prev,
                                     const MemoryView& mem, const TrackerConfig& cfg,
                                     nn::Parameters& params) {
  CascadeOutput out;
  out.backbone = backbone_forward(tape, crop, prev.center, cfg, params);
  const double half = region_half_extent(prev, cfg);
  nn::Tensor x = out.backbone.features;
  nn::Tensor coords_t = out.backbone.coords_t;
  std::vector<Vec3> coords = out.backbone.coords;
  for (int s = 1; s <= cfg.stages; ++s) {
    StageOutput so =
        stage_forward(tape, x, coords_t, coords, mem, prev.center, half, cfg, params, s);
    x = so.x_next;
    coords_t = so.sampled_votes;
    coords = so.sampled_coords;
    out.stages.push_back(std::move(so));
  }
  out.final_table = head_forward(tape, x, cfg, params);
  return out;
}

// Tracks one sequence from the first-frame box. Emits exactly one row per
// frame 2..N; when the search region is empty the previous box is re-emitted
// with score 0 and the memory is left untouched.
inline std::vector<ResultRow> track_sequence(const Sequence& seq, const Box9DoF& first_box,
                                             const TrackerConfig& cfg, nn::Parameters& params) {
  cfg.validate();
  TrackerMemory memory(static_cast<std::size_t>(cfg.memory_size));
  Box9DoF prev = first_box;

  {
    const PointSet cloud = seq.cloud(1);
    const CropResult crop = crop_points(cloud, prev, cfg.region_scale);
    if (!crop.points.empty()) {
      BackboneOut bb = backbone_forward(nullptr, crop.points, prev.center, cfg, params);
      MemoryEntry e{bb.coords, bb.coords_t, bb.features, containment_mask(prev, bb.coords)};
      memory.push(std::move(e));
    }
  }

  std::vector<ResultRow> rows;
  for (int t = 2; t <= seq.num_frames(); ++t) {
    const PointSet cloud = seq.cloud(t);
    const CropResult crop = crop_points(cloud, prev, cfg.region_scale);
    if (crop.points.empty() || memory.empty()) {
      rows.push_back(ResultRow{t, prev, 0.0});
      continue;
    }
    const MemoryView mem = memory.view(nullptr);
    const CascadeOutput out = cascade_forward(nullptr, crop.points, prev, mem, cfg, params);
    const DecodedBox decoded = decode_box(out.final_table, prev);

    MemoryEntry e{out.backbone.coords, out.backbone.coords_t, out.backbone.features,
                  containment_mask(decoded.box, out.backbone.coords)};
    memory.push(std::move(e));

    rows.push_back(ResultRow{t, decoded.box, decoded.score});
    prev = decoded.box;
  }
  return rows;
}

}  // namespace sot3d::track
