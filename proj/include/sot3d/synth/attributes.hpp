#pragma once

#include <cmath>
#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/io/sequence_io.hpp"
#include "sot3d/sequence.hpp"

namespace sot3d::synth {

// Derives the attribute flags from annotation and clouds. Similar-distractor
// presence is not recoverable from the data alone, so callers state it.
inline AttributeVector auto_attributes(const Sequence& seq, bool similar_distractors) {
  AttributeVector a{};
  std::vector<int> present;
  for (const FrameRecord& f : seq.frames) {
    if (f.present) present.push_back(f.frame);
    else a[0] = true;  // INV
  }
  a[1] = false;  // DEF: the generator emits rigid targets only
  a[5] = similar_distractors;

  Vec3 cum_rot{0.0, 0.0, 0.0};
  for (std::size_t i = 1; i < present.size(); ++i) {
    const Box9DoF& prev = *seq.frame(present[i - 1]).box;
    const Box9DoF& cur = *seq.frame(present[i]).box;
    if (norm(cur.center - prev.center) > 0.5 * norm(cur.size)) a[2] = true;  // FM
    for (int c = 0; c < 3; ++c) cum_rot[c] += std::abs(wrap_angle(cur.angles[c] - prev.angles[c]));
  }
  const double rot_limit = 10.0 * M_PI / 180.0;
  a[3] = cum_rot.x > rot_limit || cum_rot.y > rot_limit || cum_rot.z > rot_limit;  // ROT

  if (!present.empty()) {
    const double v1 = seq.frame(present.front()).box->volume();
    for (int t : present) {
      const double ratio = seq.frame(t).box->volume() / v1;
      if (ratio < 0.75 || ratio > 1.5) a[4] = true;  // SV
    }
  }

  for (int t : present) {
    const Box9DoF& box = *seq.frame(t).box;
    const PointSet cloud = seq.cloud(t);
    int inside = 0;
    for (const Vec3& p : cloud) {
      if (contains(box, p)) ++inside;
    }
    if (inside < 50) a[6] = true;  // SPA
  }
  return a;
}

}  // namespace sot3d::synth
