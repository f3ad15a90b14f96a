#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "sot3d/geom/fps.hpp"

using namespace sot3d;

namespace {

// O(n^2 m) reference with the same rules: greedy max-min distance to the
// chosen set, ties broken by lowest index, chosen points never re-selected.
std::vector<std::size_t> fps_oracle(const PointSet& points, std::size_t count, std::size_t start) {
  std::vector<std::size_t> order{start};
  std::vector<bool> chosen(points.size(), false);
  chosen[start] = true;
  while (order.size() < count) {
    std::size_t best = points.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (chosen[i]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t j : order) d = std::min(d, norm2(points[i] - points[j]));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    order.push_back(best);
    chosen[best] = true;
  }
  return order;
}

}  // namespace

TEST_CASE("farthest_point_sampling colinear fixture") {
  PointSet pts;
  for (int i = 0; i < 5; ++i) pts.push_back(Vec3{static_cast<double>(i), 0, 0});
  const auto got = farthest_point_sampling(pts, 3, 0);
  CHECK(got == std::vector<std::size_t>{0, 4, 2});
}

TEST_CASE("farthest_point_sampling selecting all points is a permutation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointSet pts;
  for (int i = 0; i < 12; ++i) pts.push_back(Vec3{u(rng), u(rng), u(rng)});
  const auto got = farthest_point_sampling(pts, 12, 0);
  REQUIRE(got.size() == 12);
  std::vector<bool> seen(12, false);
  for (std::size_t i : got) {
    REQUIRE(i < 12);
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
}

TEST_CASE("farthest_point_sampling matches the brute-force oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  PointSet pts;
  for (int i = 0; i < 50; ++i) pts.push_back(Vec3{u(rng), u(rng), u(rng)});
  CHECK(farthest_point_sampling(pts, 10, 0) == fps_oracle(pts, 10, 0));
  CHECK(farthest_point_sampling(pts, 25, 3) == fps_oracle(pts, 25, 3));
}

TEST_CASE("farthest_point_sampling handles duplicate points") {
  PointSet pts{Vec3{0, 0, 0}, Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 0, 0}};
  const auto got = farthest_point_sampling(pts, 4, 0);
  REQUIRE(got.size() == 4);
  std::vector<bool> seen(4, false);
  for (std::size_t i : got) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
  CHECK(got == fps_oracle(pts, 4, 0));
}

TEST_CASE("farthest_point_sampling min distances are non-increasing") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointSet pts;
  for (int i = 0; i < 40; ++i) pts.push_back(Vec3{u(rng), u(rng), u(rng)});
  const auto order = farthest_point_sampling(pts, 20, 0);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < order.size(); ++k) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) d = std::min(d, norm2(pts[order[k]] - pts[order[j]]));
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("farthest_point_sampling rejects invalid arguments") {
  PointSet pts{Vec3{0, 0, 0}, Vec3{1, 0, 0}};
  CHECK_THROWS_AS(farthest_point_sampling(pts, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sampling(pts, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sampling(pts, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sampling(PointSet{}, 1, 0), std::invalid_argument);
}
