#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/io/json_util.hpp"

namespace sot3d::synth {

enum class Shape { BoxShell, CylinderShell, Composite };

inline std::string shape_name(Shape s) {
  switch (s) {
    case Shape::BoxShell: return "box_shell";
    case Shape::CylinderShell: return "cylinder_shell";
    default: return "composite";
  }
}

inline Shape shape_from_name(const std::string& name, const std::string& ctx) {
  if (name == "box_shell") return Shape::BoxShell;
  if (name == "cylinder_shell") return Shape::CylinderShell;
  if (name == "composite") return Shape::Composite;
  throw FormatError(ctx + ": unknown shape '" + name + "'");
}

enum class MotionModel { ConstantVelocity, RandomWalk };

// A partial occlusion removes the fraction of target points on one side of a
// random plane; drop_fraction >= 1 hides the target entirely (absent frames).
struct OcclusionWindow {
  int first_frame = 1;  // 1-based, inclusive
  int last_frame = 1;
  double drop_fraction = 1.0;
};

struct ScenarioConfig {
  std::string id = "seq";
  std::string category = "object";
  std::uint64_t seed = 0;
  int num_frames = 12;
  Shape shape = Shape::BoxShell;
  double size_min = 0.4;  // per-axis extent range (m)
  double size_max = 1.2;
  double density = 400.0;  // surface points per m^2
  MotionModel motion = MotionModel::ConstantVelocity;
  double speed_min = 0.0;  // m/frame
  double speed_max = 0.05;
  double spin_max = 0.0;  // rad/frame, per-component magnitude cap
  int clutter_points = 200;
  int distractors = 0;
  bool similar_distractors = false;
  std::vector<OcclusionWindow> occlusions;
  double noise_sigma = 0.0;
  SymmetrySpec symmetry;
  double fps = 20.0;

  void validate() const {
    if (num_frames < 2) throw std::invalid_argument("scenario: num_frames must be >= 2");
    if (!(size_min > 0.0 && size_max >= size_min)) {
      throw std::invalid_argument("scenario: need 0 < size_min <= size_max");
    }
    if (!(density > 0.0)) throw std::invalid_argument("scenario: density must be positive");
    if (!(speed_min >= 0.0 && speed_max >= speed_min)) {
      throw std::invalid_argument("scenario: need 0 <= speed_min <= speed_max");
    }
    if (spin_max < 0.0) throw std::invalid_argument("scenario: spin_max must be >= 0");
    if (clutter_points < 0) throw std::invalid_argument("scenario: clutter_points must be >= 0");
    if (distractors < 0) throw std::invalid_argument("scenario: distractors must be >= 0");
    if (noise_sigma < 0.0) throw std::invalid_argument("scenario: noise_sigma must be >= 0");
    if (!(fps > 0.0)) throw std::invalid_argument("scenario: fps must be positive");
    for (const OcclusionWindow& w : occlusions) {
      if (w.first_frame < 1 || w.last_frame > num_frames || w.first_frame > w.last_frame) {
        throw std::invalid_argument("scenario: occlusion window out of range");
      }
      if (w.first_frame == 1 && w.drop_fraction >= 1.0) {
        throw std::invalid_argument("scenario: frame 1 must keep the target visible");
      }
      if (!(w.drop_fraction > 0.0)) {
        throw std::invalid_argument("scenario: occlusion drop_fraction must be positive");
      }
    }
    if (symmetry.k < 1) throw std::invalid_argument("scenario: symmetry k must be >= 1");
  }
};

inline json scenario_to_json(const ScenarioConfig& c) {
  json occ = json::array();
  for (const OcclusionWindow& w : c.occlusions) {
    occ.push_back({{"first_frame", w.first_frame},
                   {"last_frame", w.last_frame},
                   {"drop_fraction", w.drop_fraction}});
  }
  return json{{"id", c.id},
              {"category", c.category},
              {"seed", c.seed},
              {"num_frames", c.num_frames},
              {"shape", shape_name(c.shape)},
              {"size_min", c.size_min},
              {"size_max", c.size_max},
              {"density", c.density},
              {"motion", c.motion == MotionModel::ConstantVelocity ? "constant_velocity"
                                                                   : "random_walk"},
              {"speed_min", c.speed_min},
              {"speed_max", c.speed_max},
              {"spin_max", c.spin_max},
              {"clutter_points", c.clutter_points},
              {"distractors", c.distractors},
              {"similar_distractors", c.similar_distractors},
              {"occlusions", occ},
              {"noise_sigma", c.noise_sigma},
              {"symmetry",
               {{"symmetric", c.symmetry.symmetric},
                {"axis", axis_name(c.symmetry.axis)},
                {"k", c.symmetry.k}}},
              {"fps", c.fps}};
}

inline ScenarioConfig scenario_from_json(const json& j, const std::string& ctx) {
  ScenarioConfig c;
  auto opt_str = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = jsonu::get_string(j, key, ctx);
  };
  auto opt_num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = jsonu::get_double(j, key, ctx);
  };
  auto opt_int = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = static_cast<int>(jsonu::get_int(j, key, ctx));
  };
  opt_str("id", c.id);
  opt_str("category", c.category);
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(jsonu::get_int(j, "seed", ctx));
  opt_int("num_frames", c.num_frames);
  if (j.contains("shape")) c.shape = shape_from_name(jsonu::get_string(j, "shape", ctx), ctx);
  opt_num("size_min", c.size_min);
  opt_num("size_max", c.size_max);
  opt_num("density", c.density);
  if (j.contains("motion")) {
    const std::string m = jsonu::get_string(j, "motion", ctx);
    if (m == "constant_velocity") c.motion = MotionModel::ConstantVelocity;
    else if (m == "random_walk") c.motion = MotionModel::RandomWalk;
    else throw FormatError(ctx + ": unknown motion model '" + m + "'");
  }
  opt_num("speed_min", c.speed_min);
  opt_num("speed_max", c.speed_max);
  opt_num("spin_max", c.spin_max);
  opt_int("clutter_points", c.clutter_points);
  opt_int("distractors", c.distractors);
  if (j.contains("similar_distractors")) {
    c.similar_distractors = jsonu::get_bool(j, "similar_distractors", ctx);
  }
  if (j.contains("occlusions")) {
    const json& occ = jsonu::get_array(j, "occlusions", ctx);
    for (const json& w : occ) {
      OcclusionWindow win;
      win.first_frame = static_cast<int>(jsonu::get_int(w, "first_frame", ctx + ".occlusions"));
      win.last_frame = static_cast<int>(jsonu::get_int(w, "last_frame", ctx + ".occlusions"));
      win.drop_fraction = jsonu::get_double(w, "drop_fraction", ctx + ".occlusions");
      c.occlusions.push_back(win);
    }
  }
  opt_num("noise_sigma", c.noise_sigma);
  if (j.contains("symmetry")) {
    const json& sym = jsonu::get_object(j, "symmetry", ctx);
    c.symmetry.symmetric = jsonu::get_bool(sym, "symmetric", ctx + ".symmetry");
    const std::string axis = jsonu::get_string(sym, "axis", ctx + ".symmetry");
    if (axis == "x") c.symmetry.axis = Axis::X;
    else if (axis == "y") c.symmetry.axis = Axis::Y;
    else if (axis == "z") c.symmetry.axis = Axis::Z;
    else throw FormatError(ctx + ".symmetry: axis must be one of x, y, z");
    c.symmetry.k = static_cast<int>(jsonu::get_int(sym, "k", ctx + ".symmetry"));
  }
  opt_num("fps", c.fps);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(ctx + ": " + e.what());
  }
  return c;
}

}  // namespace sot3d::synth
