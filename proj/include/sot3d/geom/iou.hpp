#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/geom/vec3.hpp"

namespace sot3d {

namespace detail {

constexpr double kClipEps = 1e-9;  // meters; plane-side tolerance for clipping

struct Plane {
  Vec3 normal;  // unit outward normal
  double offset;  // plane is { p : dot(normal, p) = offset }, inside is <= offset
  double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
};

// Convex polytope as a set of face polygons (vertex loops). Face orientation
// is not relied upon; volume uses unsigned tetrahedra from an interior point.
using Face = std::vector<Vec3>;
using Polytope = std::vector<Face>;

inline Polytope box_polytope(const OrientedBox& b) {
  const std::vector<Vec3> c = box_corners(b);
  // Corner index layout per box_corners: bit0 -> +x, bit1 -> +y, bit2 -> +z.
  static const int kFaces[6][4] = {
      {0, 2, 6, 4},  // -x
      {1, 5, 7, 3},  // +x
      {0, 4, 5, 1},  // -y
      {2, 3, 7, 6},  // +y
      {0, 1, 3, 2},  // -z
      {4, 6, 7, 5},  // +z
  };
  Polytope poly;
  poly.reserve(6);
  for (const auto& f : kFaces) poly.push_back({c[f[0]], c[f[1]], c[f[2]], c[f[3]]});
  return poly;
}

inline std::vector<Plane> box_planes(const OrientedBox& b) {
  std::vector<Plane> planes;
  planes.reserve(6);
  const Vec3 h = b.size * 0.5;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 n_local;
    n_local[axis] = 1.0;
    const Vec3 n = b.rot * n_local;
    planes.push_back({n, dot(n, b.center) + h[axis]});
    planes.push_back({-n, dot(-n, b.center) + h[axis]});
  }
  return planes;
}

// Sutherland-Hodgman style clip of one convex polygon against a half-space.
// Vertices landing on the plane (|d| <= eps) are kept and reported to `on_plane`
// so the caller can rebuild the cap face.
inline Face clip_face(const Face& face, const Plane& plane, std::vector<Vec3>& on_plane) {
  Face out;
  const std::size_t n = face.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = face[i];
    const Vec3& b = face[(i + 1) % n];
    const double da = plane.signed_distance(a);
    const double db = plane.signed_distance(b);
    const bool a_in = da <= kClipEps;
    const bool b_in = db <= kClipEps;
    if (a_in) {
      out.push_back(a);
      if (std::abs(da) <= kClipEps) on_plane.push_back(a);
    }
    if ((a_in && !b_in) || (!a_in && b_in)) {
      // Genuine crossing; skip when either endpoint already sits on the plane.
      if (std::abs(da) > kClipEps && std::abs(db) > kClipEps) {
        const double t = da / (da - db);
        const Vec3 p = a + (b - a) * t;
        out.push_back(p);
        on_plane.push_back(p);
      }
    }
  }
  return out;
}

inline void dedupe_points(std::vector<Vec3>& pts) {
  std::vector<Vec3> unique;
  for (const Vec3& p : pts) {
    bool dup = false;
    for (const Vec3& q : unique)
      if (norm2(p - q) <= kClipEps * kClipEps) { dup = true; break; }
    if (!dup) unique.push_back(p);
  }
  pts = std::move(unique);
}

// Orders coplanar points into a convex loop by angle about their centroid.
inline Face order_cap(std::vector<Vec3> pts, const Vec3& normal) {
  dedupe_points(pts);
  if (pts.size() < 3) return {};
  Vec3 centroid;
  for (const Vec3& p : pts) centroid += p;
  centroid = centroid / static_cast<double>(pts.size());
  // Basis in the cap plane.
  Vec3 u = cross(normal, Vec3{1.0, 0.0, 0.0});
  if (norm2(u) < 1e-12) u = cross(normal, Vec3{0.0, 1.0, 0.0});
  u = u / norm(u);
  const Vec3 v = cross(normal, u);
  std::vector<std::pair<double, Vec3>> angled;
  angled.reserve(pts.size());
  for (const Vec3& p : pts) {
    const Vec3 d = p - centroid;
    angled.emplace_back(std::atan2(dot(d, v), dot(d, u)), p);
  }
  std::sort(angled.begin(), angled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Face face;
  face.reserve(angled.size());
  for (const auto& [ang, p] : angled) face.push_back(p);
  return face;
}

inline Polytope clip_polytope(const Polytope& poly, const Plane& plane) {
  // When nothing lies strictly outside the plane did not cut the polytope;
  // adding a cap then would duplicate a coincident face and inflate the
  // unsigned fan volume.
  bool any_outside = false;
  for (const Face& face : poly)
    for (const Vec3& p : face)
      if (plane.signed_distance(p) > kClipEps) { any_outside = true; break; }
  if (!any_outside) return poly;

  Polytope out;
  std::vector<Vec3> on_plane;
  for (const Face& face : poly) {
    Face clipped = clip_face(face, plane, on_plane);
    if (clipped.size() >= 3) out.push_back(std::move(clipped));
  }
  Face cap = order_cap(std::move(on_plane), plane.normal);
  if (cap.size() >= 3) out.push_back(std::move(cap));
  return out;
}

// Volume via unsigned tetrahedra fanned from the vertex centroid. Exact for
// convex polytopes (the centroid is interior, so the tetrahedra partition it).
inline double polytope_volume(const Polytope& poly) {
  std::size_t count = 0;
  Vec3 centroid;
  for (const Face& f : poly)
    for (const Vec3& p : f) { centroid += p; ++count; }
  if (count == 0) return 0.0;
  centroid = centroid / static_cast<double>(count);
  double volume = 0.0;
  for (const Face& f : poly) {
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      const Vec3 a = f[0] - centroid;
      const Vec3 b = f[i] - centroid;
      const Vec3 c = f[i + 1] - centroid;
      volume += std::abs(dot(a, cross(b, c))) / 6.0;
    }
  }
  return volume;
}

}  // namespace detail

// Volume of the convex polytope a ∩ b: a's corner polytope clipped by b's six
// half-spaces, then an unsigned tetrahedron fan. Near-degenerate slivers
// (below the clipping tolerance cubed) collapse to 0.
inline double intersection_volume(const OrientedBox& a, const OrientedBox& b) {
  detail::Polytope poly = detail::box_polytope(a);
  for (const detail::Plane& plane : detail::box_planes(b)) {
    poly = detail::clip_polytope(poly, plane);
    if (poly.empty()) return 0.0;
  }
  const double v = detail::polytope_volume(poly);
  return v > detail::kClipEps ? v : 0.0;
}

inline double intersection_volume(const Box9DoF& a, const Box9DoF& b) {
  return intersection_volume(OrientedBox::from(a), OrientedBox::from(b));
}

// 3D intersection over union. Sizes are strictly positive, so the union
// volume never vanishes.
inline double iou3d(const OrientedBox& a, const OrientedBox& b) {
  const double inter = intersection_volume(a, b);
  return inter / (a.volume() + b.volume() - inter);
}

inline double iou3d(const Box9DoF& a, const Box9DoF& b) {
  return iou3d(OrientedBox::from(a), OrientedBox::from(b));
}

// Symmetry-aware IoU: the prediction is spun k times about its own local
// symmetry axis and the best overlap wins. Non-symmetric specs fall through
// to plain iou3d.
inline double iou3d_symmetric(const Box9DoF& pred, const Box9DoF& gt, const SymmetrySpec& sym) {
  if (!sym.symmetric) return iou3d(pred, gt);
  const OrientedBox p = OrientedBox::from(pred);
  const OrientedBox g = OrientedBox::from(gt);
  double best = 0.0;
  for (int j = 0; j < sym.k; ++j) {
    const double angle = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(sym.k);
    best = std::max(best, iou3d(spun_about_local_axis(p, sym.axis, angle), g));
  }
  return best;
}

}  // namespace sot3d
