#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sot3d/errors.hpp"
#include "sot3d/geom/vec3.hpp"

namespace sot3d {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline std::string axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "z";
  }
}

// Discretized-rotation symmetry of a target about one of its local box axes.
struct SymmetrySpec {
  bool symmetric = false;
  Axis axis = Axis::Z;
  int k = 120;  // rotation count; ignored when symmetric == false
};

// Intrinsic Z-Y-X rotation: R = Rz(alpha) * Ry(beta) * Rx(gamma),
// i.e. yaw about z, then pitch about y, then roll about x.
inline Mat3 rotation_matrix(const Vec3& angles) {
  if (!finite(angles))
    throw std::invalid_argument("rotation_matrix: non-finite angles");
  const double ca = std::cos(angles.x), sa = std::sin(angles.x);
  const double cb = std::cos(angles.y), sb = std::sin(angles.y);
  const double cg = std::cos(angles.z), sg = std::sin(angles.z);
  Mat3 r;
  r.m[0][0] = ca * cb;
  r.m[0][1] = ca * sb * sg - sa * cg;
  r.m[0][2] = ca * sb * cg + sa * sg;
  r.m[1][0] = sa * cb;
  r.m[1][1] = sa * sb * sg + ca * cg;
  r.m[1][2] = sa * sb * cg - ca * sg;
  r.m[2][0] = -sb;
  r.m[2][1] = cb * sg;
  r.m[2][2] = cb * cg;
  return r;
}

// Oriented 3D bounding box with 9 degrees of freedom: center (x,y,z),
// size (w,h,l) = extents along the local x/y/z axes, and Euler angles
// (alpha,beta,gamma) in radians, stored wrapped to (-pi, pi].
struct Box9DoF {
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};
  Vec3 angles;

  Box9DoF() = default;

  Box9DoF(const Vec3& center_, const Vec3& size_, const Vec3& angles_)
      : center(center_), size(size_), angles(angles_) {
    if (!finite(center) || !finite(size) || !finite(angles))
      throw std::invalid_argument("Box9DoF: non-finite component");
    if (!(size.x > 0.0 && size.y > 0.0 && size.z > 0.0))
      throw std::invalid_argument("Box9DoF: size components must be strictly positive");
    angles = {wrap_angle(angles.x), wrap_angle(angles.y), wrap_angle(angles.z)};
  }

  Mat3 rotation() const { return rotation_matrix(angles); }
  double volume() const { return size.x * size.y * size.z; }
  Vec3 half() const { return size * 0.5; }
};

// Matrix-form oriented box. Frees symmetric-IoU spins and rigid transforms
// from round-tripping through Euler angles.
struct OrientedBox {
  Vec3 center;
  Vec3 size;
  Mat3 rot;

  static OrientedBox from(const Box9DoF& b) { return {b.center, b.size, b.rotation()}; }
  double volume() const { return size.x * size.y * size.z; }
};

// Rotation about one coordinate axis.
inline Mat3 axis_rotation(Axis axis, double angle) {
  switch (axis) {
    case Axis::X: return rotation_matrix({0.0, 0.0, angle});
    case Axis::Y: return rotation_matrix({0.0, angle, 0.0});
    default: return rotation_matrix({angle, 0.0, 0.0});
  }
}

// Spins the box about its own local axis; the geometry rotates in place.
inline OrientedBox spun_about_local_axis(const OrientedBox& b, Axis axis, double angle) {
  return {b.center, b.size, b.rot * axis_rotation(axis, angle)};
}

// Corner k has local offset signs (x,y,z) = (bit0 ? + : -, bit1 ? + : -, bit2 ? + : -):
//   0:(-,-,-) 1:(+,-,-) 2:(-,+,-) 3:(+,+,-) 4:(-,-,+) 5:(+,-,+) 6:(-,+,+) 7:(+,+,+)
inline std::vector<Vec3> box_corners(const OrientedBox& b) {
  const Vec3 h = b.size * 0.5;
  std::vector<Vec3> corners;
  corners.reserve(8);
  for (int k = 0; k < 8; ++k) {
    const Vec3 local{(k & 1) ? h.x : -h.x, (k & 2) ? h.y : -h.y, (k & 4) ? h.z : -h.z};
    corners.push_back(b.center + b.rot * local);
  }
  return corners;
}

inline std::vector<Vec3> box_corners(const Box9DoF& b) {
  return box_corners(OrientedBox::from(b));
}

// Closed-box containment: |R^T (p - center)| <= size/2 component-wise.
inline bool contains(const OrientedBox& b, const Vec3& p) {
  const Vec3 local = b.rot.apply_transposed(p - b.center);
  const Vec3 h = b.size * 0.5;
  return std::abs(local.x) <= h.x && std::abs(local.y) <= h.y && std::abs(local.z) <= h.z;
}

inline bool contains(const Box9DoF& b, const Vec3& p) {
  return contains(OrientedBox::from(b), p);
}

struct CropResult {
  PointSet points;                   // input order preserved
  std::vector<std::size_t> indices;  // indices[i] = position of points[i] in the input cloud
};

// Points of `cloud` inside `box` scaled by `scale` about its center (angles kept).
inline CropResult crop_points(const PointSet& cloud, const Box9DoF& box, double scale) {
  if (!(scale >= 1.0)) throw std::invalid_argument("crop_points: scale must be >= 1");
  OrientedBox region = OrientedBox::from(box);
  region.size = region.size * scale;
  CropResult out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (contains(region, cloud[i])) {
      out.points.push_back(cloud[i]);
      out.indices.push_back(i);
    }
  }
  return out;
}

}  // namespace sot3d
