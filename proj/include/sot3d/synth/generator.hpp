#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sot3d/errors.hpp"
#include "sot3d/geom/box.hpp"
#include "sot3d/rng.hpp"
#include "sot3d/sequence.hpp"
#include "sot3d/synth/attributes.hpp"
#include "sot3d/synth/scenario.hpp"

namespace sot3d::synth {

namespace detail {

struct Pose {
  Vec3 center;
  Vec3 angles;
};

inline double shell_area(Shape shape, const Vec3& s) {
  switch (shape) {
    case Shape::BoxShell:
      return 2.0 * (s.y * s.z + s.x * s.z + s.x * s.y);
    case Shape::CylinderShell: {
      const double r = 0.5 * std::min(s.x, s.y);
      return 2.0 * M_PI * r * s.z + 2.0 * M_PI * r * r;
    }
    default: {
      const Vec3 lower{s.x, s.y, 0.5 * s.z};
      const double r = 0.25 * std::min(s.x, s.y);
      return shell_area(Shape::BoxShell, lower) + 2.0 * M_PI * r * (0.5 * s.z) +
             2.0 * M_PI * r * r;
    }
  }
}

inline Vec3 sample_box_shell(Rng& rng, const Vec3& s) {
  const double areas[3] = {s.y * s.z, s.x * s.z, s.x * s.y};  // +-x, +-y, +-z faces
  const double total = areas[0] + areas[1] + areas[2];
  double pick = rng.uniform(0.0, total);
  int axis = 0;
  while (axis < 2 && pick >= areas[axis]) {
    pick -= areas[axis];
    ++axis;
  }
  const double sign = rng.uniform() < 0.5 ? -0.5 : 0.5;
  Vec3 p{rng.uniform(-0.5, 0.5) * s.x, rng.uniform(-0.5, 0.5) * s.y, rng.uniform(-0.5, 0.5) * s.z};
  p[axis] = sign * s[axis];
  return p;
}

inline Vec3 sample_cylinder_shell(Rng& rng, double r, double height) {
  const double lateral = 2.0 * M_PI * r * height;
  const double caps = 2.0 * M_PI * r * r;
  const double theta = rng.uniform(0.0, 2.0 * M_PI);
  if (rng.uniform(0.0, lateral + caps) < lateral) {
    return Vec3{r * std::cos(theta), r * std::sin(theta), rng.uniform(-0.5, 0.5) * height};
  }
  const double rho = r * std::sqrt(rng.uniform());
  const double z = rng.uniform() < 0.5 ? -0.5 * height : 0.5 * height;
  return Vec3{rho * std::cos(theta), rho * std::sin(theta), z};
}

inline Vec3 sample_shape_point(Rng& rng, Shape shape, const Vec3& s) {
  switch (shape) {
    case Shape::BoxShell:
      return sample_box_shell(rng, s);
    case Shape::CylinderShell:
      return sample_cylinder_shell(rng, 0.5 * std::min(s.x, s.y), s.z);
    default: {
      const Vec3 lower{s.x, s.y, 0.5 * s.z};
      const double r = 0.25 * std::min(s.x, s.y);
      const double a_box = shell_area(Shape::BoxShell, lower);
      const double a_cyl = 2.0 * M_PI * r * (0.5 * s.z) + 2.0 * M_PI * r * r;
      if (rng.uniform(0.0, a_box + a_cyl) < a_box) {
        return sample_box_shell(rng, lower) + Vec3{0.0, 0.0, -0.25 * s.z};
      }
      return sample_cylinder_shell(rng, r, 0.5 * s.z) + Vec3{0.0, 0.0, 0.25 * s.z};
    }
  }
}

// Shell samples are pulled a hair inside the surface so box membership
// survives rotation round-off and float32 serialization.
constexpr double kShellInset = 1.0 - 1e-5;

inline PointSet sample_shell(Rng& rng, Shape shape, const Vec3& size, double density) {
  const long long n = std::max(1LL, std::llround(density * shell_area(shape, size)));
  PointSet out(static_cast<std::size_t>(n));
  for (auto& p : out) p = sample_shape_point(rng, shape, size) * kShellInset;
  return out;
}

// Keeps the points on the visible side of a plane through the shape, normal d.
inline PointSet drop_half_space(const PointSet& local, const Vec3& d, double fraction) {
  const std::size_t n = local.size();
  const std::size_t n_drop =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double pa = dot(local[a], d);
    const double pb = dot(local[b], d);
    return pa != pb ? pa > pb : a < b;
  });
  PointSet kept;
  kept.reserve(n - n_drop);
  for (std::size_t i = n_drop; i < n; ++i) kept.push_back(local[order[i]]);
  return kept;
}

}  // namespace detail

// Builds a full in-memory sequence (annotation + clouds) from a scenario.
// Every draw comes from one seeded stream, so equal configs give equal bytes.
inline Sequence generate_sequence(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  const Vec3 size{rng.uniform(cfg.size_min, cfg.size_max), rng.uniform(cfg.size_min, cfg.size_max),
                  rng.uniform(cfg.size_min, cfg.size_max)};
  detail::Pose pose{Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)},
                    Vec3{rng.uniform(-M_PI, M_PI), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)}};
  Vec3 velocity = rng.unit_vector() * rng.uniform(cfg.speed_min, cfg.speed_max);
  Vec3 spin{rng.uniform(-cfg.spin_max, cfg.spin_max), rng.uniform(-cfg.spin_max, cfg.spin_max),
            rng.uniform(-cfg.spin_max, cfg.spin_max)};

  struct Distractor {
    Vec3 offset;
    Vec3 size;
    Vec3 angles;
  };
  std::vector<Distractor> distractors;
  for (int d = 0; d < cfg.distractors; ++d) {
    Distractor dis;
    dis.offset = rng.unit_vector() * (norm(size) * rng.uniform(1.3, 2.2));
    if (cfg.similar_distractors) {
      dis.size = Vec3{size.x * rng.uniform(0.9, 1.1), size.y * rng.uniform(0.9, 1.1),
                      size.z * rng.uniform(0.9, 1.1)};
    } else {
      dis.size = Vec3{size.x * rng.uniform(0.45, 0.75), size.y * rng.uniform(0.45, 0.75),
                      size.z * rng.uniform(0.45, 0.75)};
    }
    dis.angles = Vec3{rng.uniform(-M_PI, M_PI), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    distractors.push_back(dis);
  }

  std::vector<Vec3> occluder_dirs;
  for (std::size_t w = 0; w < cfg.occlusions.size(); ++w) occluder_dirs.push_back(rng.unit_vector());

  // Trajectory first, then per-frame sampling, so the draw order is stable.
  std::vector<detail::Pose> poses(static_cast<std::size_t>(cfg.num_frames));
  poses[0] = pose;
  for (int t = 1; t < cfg.num_frames; ++t) {
    if (cfg.motion == MotionModel::RandomWalk) {
      velocity = rng.unit_vector() * rng.uniform(cfg.speed_min, cfg.speed_max);
      spin = Vec3{rng.uniform(-cfg.spin_max, cfg.spin_max), rng.uniform(-cfg.spin_max, cfg.spin_max),
                  rng.uniform(-cfg.spin_max, cfg.spin_max)};
    }
    pose.center = pose.center + velocity;
    pose.angles = Vec3{wrap_angle(pose.angles.x + spin.x), wrap_angle(pose.angles.y + spin.y),
                       wrap_angle(pose.angles.z + spin.z)};
    poses[static_cast<std::size_t>(t)] = pose;
  }

  Vec3 lo = poses[0].center, hi = poses[0].center;
  for (const auto& p : poses) {
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], p.center[c]);
      hi[c] = std::max(hi[c], p.center[c]);
    }
  }
  const double margin = 1.5 * norm(size) + 1.0;
  lo = lo - Vec3{margin, margin, margin};
  hi = hi + Vec3{margin, margin, margin};

  Sequence seq;
  seq.meta.id = cfg.id;
  seq.meta.category = cfg.category;
  seq.meta.symmetry = cfg.symmetry;
  seq.meta.fps = cfg.fps;
  seq.meta.num_frames = cfg.num_frames;

  for (int t = 1; t <= cfg.num_frames; ++t) {
    const detail::Pose& p = poses[static_cast<std::size_t>(t - 1)];
    double drop = 0.0;
    int window = -1;
    for (std::size_t w = 0; w < cfg.occlusions.size(); ++w) {
      const OcclusionWindow& win = cfg.occlusions[w];
      if (t >= win.first_frame && t <= win.last_frame && win.drop_fraction > drop) {
        drop = win.drop_fraction;
        window = static_cast<int>(w);
      }
    }
    const bool present = drop < 1.0;

    PointSet cloud;
    if (present) {
      PointSet local = detail::sample_shell(rng, cfg.shape, size, cfg.density);
      if (drop > 0.0) {
        local = detail::drop_half_space(local, occluder_dirs[static_cast<std::size_t>(window)], drop);
      }
      if (local.empty()) {
        throw ProtocolError("scenario " + cfg.id + ": frame " + std::to_string(t) +
                            " is labeled present but has no target points");
      }
      const Mat3 rot = rotation_matrix(p.angles);
      for (const Vec3& q : local) {
        Vec3 world = p.center + rot * q;
        if (cfg.noise_sigma > 0.0) {
          world = world + Vec3{cfg.noise_sigma * rng.normal(), cfg.noise_sigma * rng.normal(),
                               cfg.noise_sigma * rng.normal()};
        }
        cloud.push_back(world);
      }
    }

    for (const auto& dis : distractors) {
      const PointSet local = detail::sample_shell(rng, cfg.shape, dis.size, cfg.density);
      const Mat3 rot = rotation_matrix(dis.angles);
      for (const Vec3& q : local) {
        Vec3 world = p.center + dis.offset + rot * q;
        if (cfg.noise_sigma > 0.0) {
          world = world + Vec3{cfg.noise_sigma * rng.normal(), cfg.noise_sigma * rng.normal(),
                               cfg.noise_sigma * rng.normal()};
        }
        cloud.push_back(world);
      }
    }
    for (int i = 0; i < cfg.clutter_points; ++i) {
      cloud.push_back(Vec3{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)});
    }
    rng.shuffle(cloud);

    FrameRecord f;
    f.frame = t;
    f.present = present;
    f.absence = present ? AbsenceReason::None : AbsenceReason::FullOcclusion;
    if (present) f.box = Box9DoF(p.center, size, p.angles);
    seq.frames.push_back(std::move(f));
    seq.clouds.push_back(std::move(cloud));
  }

  seq.meta.attributes = auto_attributes(seq, cfg.similar_distractors && cfg.distractors > 0);
  return seq;
}

}  // namespace sot3d::synth
