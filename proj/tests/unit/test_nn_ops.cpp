#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "sot3d/nn/edge_conv.hpp"
#include "sot3d/nn/grad_check.hpp"
#include "sot3d/nn/ops.hpp"
#include "sot3d/nn/voxel.hpp"

using namespace sot3d;
using namespace sot3d::nn;

namespace {

constexpr double kGradTol = 1e-4;

Tensor rand_tensor(std::size_t rows, std::size_t cols, std::uint32_t seed, double lo = -1.0,
                   double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = u(rng);
  return Tensor::from_values(rows, cols, std::move(v));
}

std::vector<Vec3> rand_points(std::size_t n, std::uint32_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3{u(rng), u(rng), u(rng)};
  return pts;
}

}  // namespace

TEST_CASE("elementwise op forward fixtures") {
  const Tensor a = Tensor::from_values(2, 2, {1.0, 2.0, 3.0, 4.0});
  const Tensor b = Tensor::from_values(2, 2, {0.5, -1.0, 2.0, 0.25});
  CHECK(add(nullptr, a, b).values() == std::vector<double>{1.5, 1.0, 5.0, 4.25});
  CHECK(sub(nullptr, a, b).values() == std::vector<double>{0.5, 3.0, 1.0, 3.75});
  CHECK(mul(nullptr, a, b).values() == std::vector<double>{0.5, -2.0, 6.0, 1.0});
  CHECK(scale(nullptr, a, -2.0).values() == std::vector<double>{-2.0, -4.0, -6.0, -8.0});
  CHECK_THROWS_AS(add(nullptr, a, Tensor(2, 3)), ShapeError);

  const Tensor v = Tensor::from_values(1, 2, {10.0, 20.0});
  CHECK(add_rowvec(nullptr, a, v).values() == std::vector<double>{11.0, 22.0, 13.0, 24.0});
  CHECK(sub_rowvec(nullptr, a, v).values() == std::vector<double>{-9.0, -18.0, -7.0, -16.0});
  CHECK(mul_rowvec(nullptr, a, v).values() == std::vector<double>{10.0, 40.0, 30.0, 80.0});
  CHECK_THROWS_AS(add_rowvec(nullptr, a, Tensor(1, 3)), ShapeError);
}

TEST_CASE("matmul forward fixtures") {
  const Tensor a = Tensor::from_values(2, 3, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from_values(3, 2, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(nullptr, a, b);
  CHECK(c.values() == std::vector<double>{58, 64, 139, 154});

  // matmul_nt(a, bt) with bt = b^T stored [2 x 3].
  const Tensor bt = Tensor::from_values(2, 3, {7, 9, 11, 8, 10, 12});
  CHECK(matmul_nt(nullptr, a, bt).values() == c.values());
  CHECK_THROWS_AS(matmul(nullptr, a, Tensor(2, 2)), ShapeError);
  CHECK_THROWS_AS(matmul_nt(nullptr, a, Tensor(2, 2)), ShapeError);
}

TEST_CASE("activation forward fixtures") {
  const Tensor x = Tensor::from_values(1, 4, {-2.0, 0.0, 0.5, 3.0});
  CHECK(relu(nullptr, x).values() == std::vector<double>{0.0, 0.0, 0.5, 3.0});

  const Tensor s = sigmoid(nullptr, Tensor::from_values(1, 3, {0.0, -1000.0, 1000.0}));
  CHECK(s.values()[0] == 0.5);
  CHECK(s.values()[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(s.values()[2] == Catch::Approx(1.0).margin(1e-12));

  const Tensor sm = softmax_rows(nullptr, Tensor::from_values(2, 2, {0.0, std::log(2.0), 5.0, 5.0}));
  CHECK(sm.values()[0] == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(sm.values()[1] == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(sm.values()[2] == Catch::Approx(0.5).margin(1e-12));
  CHECK(sm.values()[3] == Catch::Approx(0.5).margin(1e-12));
  // Max subtraction keeps huge logits finite.
  CHECK_NOTHROW(softmax_rows(nullptr, Tensor::from_values(1, 2, {1e300, 1e300})));
}

TEST_CASE("layer_norm_rows normalizes each row") {
  const Tensor x = rand_tensor(3, 6, 42, -2.0, 2.0);
  const Tensor gain = Tensor(1, 6, 1.0);
  const Tensor bias = Tensor(1, 6, 0.0);
  const Tensor y = layer_norm_rows(nullptr, x, gain, bias);
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 6; ++c) mean += y.at(r, c);
    mean /= 6.0;
    for (std::size_t c = 0; c < 6; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
    var /= 6.0;
    CHECK(mean == Catch::Approx(0.0).margin(1e-12));
    CHECK(var == Catch::Approx(1.0).margin(1e-4));  // eps shifts variance slightly
  }
  const Tensor bias2 = Tensor(1, 6, 3.0);
  const Tensor y2 = layer_norm_rows(nullptr, x, gain, bias2);
  CHECK(y2.at(0, 0) == Catch::Approx(y.at(0, 0) + 3.0).margin(1e-12));
}

TEST_CASE("shape ops forward fixtures") {
  const Tensor a = Tensor::from_values(2, 2, {1, 2, 3, 4});
  const Tensor b = Tensor::from_values(2, 1, {5, 6});
  CHECK(concat_cols(nullptr, a, b).values() == std::vector<double>{1, 2, 5, 3, 4, 6});
  CHECK_THROWS_AS(concat_cols(nullptr, a, Tensor(3, 1)), ShapeError);

  const Tensor c = Tensor::from_values(1, 2, {7, 8});
  CHECK(concat_rows(nullptr, {a, c}).values() == std::vector<double>{1, 2, 3, 4, 7, 8});
  CHECK_THROWS_AS(concat_rows(nullptr, {a, Tensor(1, 3)}), ShapeError);
  CHECK_THROWS_AS(concat_rows(nullptr, {}), ShapeError);

  CHECK(gather_rows(nullptr, a, {1, 0, 1}).values() == std::vector<double>{3, 4, 1, 2, 3, 4});
  CHECK_THROWS_AS(gather_rows(nullptr, a, {2}), ShapeError);

  const Tensor w = Tensor::from_values(2, 4, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(slice_cols(nullptr, w, 1, 3).values() == std::vector<double>{2, 3, 6, 7});
  CHECK_THROWS_AS(slice_cols(nullptr, w, 3, 3), ShapeError);
  CHECK_THROWS_AS(slice_cols(nullptr, w, 2, 5), ShapeError);

  const Tensor g = Tensor::from_values(4, 2, {1, 8, 3, 2, 9, 0, 4, 7});
  CHECK(group_max(nullptr, g, 2).values() == std::vector<double>{3, 8, 9, 7});
  CHECK_THROWS_AS(group_max(nullptr, g, 3), ShapeError);

  CHECK(sum_all(nullptr, a).item() == 10.0);
  CHECK(mean_all(nullptr, a).item() == 2.5);
}

TEST_CASE("loss op forward fixtures") {
  // BCE at logit 0: max(0,0) - 0*t + log(2) = log 2 regardless of target.
  CHECK(bce_with_logits_mean(nullptr, Tensor::from_values(1, 2, {0.0, 0.0}), {0.0, 1.0}).item() ==
        Catch::Approx(std::log(2.0)).margin(1e-12));
  // Large logits stay finite.
  CHECK(bce_with_logits_mean(nullptr, Tensor::from_values(1, 2, {500.0, -500.0}), {1.0, 0.0})
            .item() == Catch::Approx(0.0).margin(1e-12));
  CHECK(bce_with_logits_mean(nullptr, Tensor::from_values(1, 1, {500.0}), {0.0}).item() ==
        Catch::Approx(500.0).margin(1e-9));
  CHECK_THROWS_AS(bce_with_logits_mean(nullptr, Tensor(1, 2), {1.0}), ShapeError);

  const Tensor d = Tensor::from_values(2, 2, {1.0, 2.0, 3.0, 0.0});
  CHECK(weighted_sq_sum(nullptr, d, {1.0, 0.5}, 6.0).item() ==
        Catch::Approx((1.0 * 5.0 + 0.5 * 9.0) / 6.0).margin(1e-12));
  CHECK_THROWS_AS(weighted_sq_sum(nullptr, d, {1.0}, 6.0), ShapeError);
  CHECK_THROWS_AS(weighted_sq_sum(nullptr, d, {1.0, 1.0}, 0.0), std::invalid_argument);

  // Smooth L1: d = 0.5 -> 0.125, d = 2 -> 1.5.
  CHECK(smooth_l1_mean(nullptr, Tensor::from_values(1, 2, {0.5, 2.0}), {0.0, 0.0}).item() ==
        Catch::Approx((0.125 + 1.5) / 2.0).margin(1e-12));
  CHECK_THROWS_AS(smooth_l1_mean(nullptr, Tensor(1, 2), {1.0}), ShapeError);
}

TEST_CASE("conv1d forward fixtures") {
  const Tensor x = Tensor::from_values(4, 1, {1, 2, 3, 4});
  const Tensor b0 = Tensor(1, 1, 0.0);
  // Center tap only: identity.
  CHECK(conv1d(nullptr, x, Tensor::from_values(1, 3, {0, 1, 0}), b0, 3).values() ==
        std::vector<double>{1, 2, 3, 4});
  // Left tap: shift down with zero padding.
  CHECK(conv1d(nullptr, x, Tensor::from_values(1, 3, {1, 0, 0}), b0, 3).values() ==
        std::vector<double>{0, 1, 2, 3});
  // Right tap: shift up.
  CHECK(conv1d(nullptr, x, Tensor::from_values(1, 3, {0, 0, 1}), b0, 3).values() ==
        std::vector<double>{2, 3, 4, 0});
  // Bias.
  CHECK(conv1d(nullptr, x, Tensor::from_values(1, 3, {0, 1, 0}), Tensor(1, 1, 10.0), 3).values() ==
        std::vector<double>{11, 12, 13, 14});
  CHECK_THROWS_AS(conv1d(nullptr, x, Tensor(1, 2), b0, 2), ShapeError);
  CHECK_THROWS_AS(conv1d(nullptr, x, Tensor(1, 4), b0, 3), ShapeError);
}

TEST_CASE("voxel grid indexing and scatter mean") {
  VoxelGrid grid;
  grid.origin = Vec3{0, 0, 0};
  grid.cell = 1.0;
  grid.g = 2;
  CHECK(grid.cells() == 8);
  CHECK(grid.cell_index(Vec3{0.5, 0.5, 0.5}) == 0);
  CHECK(grid.cell_index(Vec3{1.5, 0.5, 0.5}) == 1);
  CHECK(grid.cell_index(Vec3{0.5, 1.5, 0.5}) == 2);
  CHECK(grid.cell_index(Vec3{0.5, 0.5, 1.5}) == 4);
  // Out-of-range points clamp to the border cells.
  CHECK(grid.cell_index(Vec3{-5, -5, -5}) == 0);
  CHECK(grid.cell_index(Vec3{99, 99, 99}) == 7);

  const Tensor f = Tensor::from_values(3, 2, {1, 2, 3, 4, 10, 20});
  const Tensor vox = voxel_scatter_mean(nullptr, f, {0, 0, 3}, grid);
  CHECK(vox.rows() == 8);
  CHECK(vox.at(0, 0) == 2.0);
  CHECK(vox.at(0, 1) == 3.0);
  CHECK(vox.at(3, 0) == 10.0);
  CHECK(vox.at(1, 0) == 0.0);  // empty cells stay zero
  CHECK_THROWS_AS(voxel_scatter_mean(nullptr, f, {0, 0}, grid), ShapeError);
  CHECK_THROWS_AS(voxel_scatter_mean(nullptr, f, {0, 0, 99}, grid), ShapeError);
}

TEST_CASE("conv3d forward fixtures") {
  const std::size_t g = 3;
  Tensor vox(g * g * g, 1, 1.0);
  // All-ones weights count the in-bounds neighbors of each cell.
  const Tensor w_ones = Tensor(1, 27, 1.0);
  const Tensor b0 = Tensor(1, 1, 0.0);
  const Tensor counts = conv3d(nullptr, vox, w_ones, b0, g);
  CHECK(counts.at(0, 0) == 8.0);                    // corner: 2x2x2
  CHECK(counts.at(13, 0) == 27.0);                  // center: full stencil
  CHECK(counts.at(1, 0) == 12.0);                   // edge midpoint: 3x2x2
  CHECK(counts.at(4, 0) == 18.0);                   // face center: 3x3x2

  // Center-tap identity kernel reproduces the input.
  std::vector<double> w_id(27, 0.0);
  w_id[13] = 1.0;
  Tensor ramp = Tensor::from_values(g * g * g, 1, [] {
    std::vector<double> v(27);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) * 0.5;
    return v;
  }());
  const Tensor out = conv3d(nullptr, ramp, Tensor::from_values(1, 27, w_id), b0, g);
  CHECK(out.values() == ramp.values());

  CHECK_THROWS_AS(conv3d(nullptr, vox, Tensor(1, 26), b0, g), ShapeError);
  CHECK_THROWS_AS(conv3d(nullptr, Tensor(8, 1), w_ones, b0, g), ShapeError);
}

TEST_CASE("trilinear_gather forward fixtures") {
  VoxelGrid grid;
  grid.origin = Vec3{0, 0, 0};
  grid.cell = 1.0;
  grid.g = 2;
  // Feature = 100*ix + 10*iy + iz at each cell.
  std::vector<double> fv(8);
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) fv[(z * 2 + y) * 2 + x] = 100.0 * x + 10.0 * y + z;
  const Tensor vox = Tensor::from_values(8, 1, std::move(fv));

  // At a cell center the value is exact; midway along x it is the average.
  const Tensor at_center =
      trilinear_gather(nullptr, vox, Tensor::from_values(1, 3, {0.5, 0.5, 0.5}), grid);
  CHECK(at_center.item() == 0.0);
  const Tensor mid =
      trilinear_gather(nullptr, vox, Tensor::from_values(1, 3, {1.0, 0.5, 0.5}), grid);
  CHECK(mid.item() == 50.0);
  const Tensor centroid =
      trilinear_gather(nullptr, vox, Tensor::from_values(1, 3, {1.0, 1.0, 1.0}), grid);
  CHECK(centroid.item() == Catch::Approx(55.5).margin(1e-12));
  // Far outside the grid the value clamps to the nearest corner cell.
  const Tensor outside =
      trilinear_gather(nullptr, vox, Tensor::from_values(1, 3, {9.0, 9.0, 9.0}), grid);
  CHECK(outside.item() == 111.0);
  CHECK_THROWS_AS(trilinear_gather(nullptr, vox, Tensor(1, 2), grid), ShapeError);
}

TEST_CASE("attention forward fixture") {
  // Two keys; query aligned with the first key dominates as scale grows.
  const Tensor q = Tensor::from_values(1, 2, {10.0, 0.0});
  const Tensor k = Tensor::from_values(2, 2, {10.0, 0.0, -10.0, 0.0});
  const Tensor v = Tensor::from_values(2, 2, {1.0, 2.0, 100.0, 200.0});
  const Tensor out = attention(nullptr, q, k, v);
  CHECK(out.at(0, 0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(out.at(0, 1) == Catch::Approx(2.0).margin(1e-9));
  CHECK_THROWS_AS(attention(nullptr, q, Tensor(2, 3), v), ShapeError);
}

TEST_CASE("ops are pure without a tape and record nothing without grads") {
  Tape tape;
  const Tensor a = rand_tensor(2, 2, 1);
  const Tensor b = rand_tensor(2, 2, 2);
  const Tensor out = add(&tape, a, b);
  CHECK_FALSE(out.needs_grad());
  CHECK(tape.size() == 0);

  Tensor c = rand_tensor(2, 2, 3);
  c.set_needs_grad(true);
  const Tensor out2 = add(nullptr, a, c);
  CHECK_FALSE(out2.needs_grad());
  const Tensor out3 = add(&tape, a, c);
  CHECK(out3.needs_grad());
  CHECK(tape.size() == 1);
}

TEST_CASE("non-finite results raise NumericError") {
  const Tensor big = Tensor(1, 1, 1e308);
  CHECK_THROWS_AS(add(nullptr, big, big), NumericError);
  CHECK_THROWS_AS(mul(nullptr, big, big), NumericError);
  CHECK_THROWS_AS(scale(nullptr, big, 1e10), NumericError);
  const Tensor nan_in = Tensor(1, 1, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(scale(nullptr, nan_in, 1.0), NumericError);
  CHECK_THROWS_AS(sigmoid(nullptr, nan_in), NumericError);
}

TEST_CASE("gradient checks for elementwise and matrix ops") {
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, add(t, in[0], in[1]), sub(t, in[0], in[1])));
        },
        {rand_tensor(3, 2, 10), rand_tensor(3, 2, 11)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return mean_all(t, scale(t, in[0], -1.7));
        },
        {rand_tensor(2, 3, 12)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul_rowvec(t, add_rowvec(t, in[0], in[1]), in[2]));
        },
        {rand_tensor(3, 4, 13), rand_tensor(1, 4, 14), rand_tensor(1, 4, 15)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, sub_rowvec(t, in[0], in[1]));
        },
        {rand_tensor(3, 4, 16), rand_tensor(1, 4, 17)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, matmul(t, in[0], in[1]), matmul(t, in[0], in[1])));
        },
        {rand_tensor(3, 4, 18), rand_tensor(4, 2, 19)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, matmul_nt(t, in[0], in[1]));
        },
        {rand_tensor(3, 4, 20), rand_tensor(2, 4, 21)}) < kGradTol);
}

TEST_CASE("gradient checks for activations and norms") {
  // Inputs are kept away from the relu kink.
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, relu(t, in[0]));
        },
        {rand_tensor(3, 4, 22, 0.2, 1.5)}) < kGradTol);
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, relu(t, in[0]));
        },
        {rand_tensor(3, 4, 23, -1.5, -0.2)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return mean_all(t, sigmoid(t, in[0]));
        },
        {rand_tensor(3, 4, 24, -2.0, 2.0)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, softmax_rows(t, in[0]), in[1]));
        },
        {rand_tensor(3, 4, 25), rand_tensor(3, 4, 26)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, layer_norm_rows(t, in[0], in[1], in[2]), in[3]));
        },
        {rand_tensor(3, 5, 27), rand_tensor(1, 5, 28, 0.5, 1.5), rand_tensor(1, 5, 29),
         rand_tensor(3, 5, 30)}) < kGradTol);
}

TEST_CASE("gradient checks for shape ops") {
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, concat_cols(t, in[0], in[1]), concat_cols(t, in[0], in[1])));
        },
        {rand_tensor(3, 2, 31), rand_tensor(3, 3, 32)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          const Tensor cat = concat_rows(t, {in[0], in[1]});
          return sum_all(t, mul(t, cat, cat));
        },
        {rand_tensor(2, 3, 33), rand_tensor(4, 3, 34)}) < kGradTol);

  // Duplicate gather indices must accumulate.
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          const Tensor g = gather_rows(t, in[0], {0, 2, 0, 1});
          return sum_all(t, mul(t, g, g));
        },
        {rand_tensor(3, 2, 35)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          const Tensor s = slice_cols(t, in[0], 1, 3);
          return sum_all(t, mul(t, s, s));
        },
        {rand_tensor(3, 4, 36)}) < kGradTol);

  // Values are well separated so the FD step cannot flip the argmax.
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, group_max(t, in[0], 2), in[1]));
        },
        {Tensor::from_values(4, 2, {0.9, 0.1, 0.2, 0.8, 0.4, 0.6, 0.7, 0.3}),
         rand_tensor(2, 2, 37)}) < kGradTol);
}

TEST_CASE("gradient checks for losses") {
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return bce_with_logits_mean(t, in[0], {1.0, 0.0, 1.0, 0.0, 1.0, 1.0});
        },
        {rand_tensor(2, 3, 38, -2.0, 2.0)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return weighted_sq_sum(t, in[0], {1.0, 0.0, 0.5}, 9.0);
        },
        {rand_tensor(3, 3, 39)}) < kGradTol);

  // Targets keep |diff| away from the smooth-L1 kink at 1.
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return smooth_l1_mean(t, in[0], {0.1, -0.2, 3.0, -3.0, 0.0, 0.3});
        },
        {rand_tensor(2, 3, 40, -0.5, 0.5)}) < kGradTol);
}

TEST_CASE("gradient checks for convolutions and attention") {
  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, conv1d(t, in[0], in[1], in[2], 3), in[3]));
        },
        {rand_tensor(5, 2, 41), rand_tensor(3, 6, 42), rand_tensor(1, 3, 43),
         rand_tensor(5, 3, 44)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, conv3d(t, in[0], in[1], in[2], 2), in[3]));
        },
        {rand_tensor(8, 2, 45), rand_tensor(2, 54, 46), rand_tensor(1, 2, 47),
         rand_tensor(8, 2, 48)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, attention(t, in[0], in[1], in[2]), in[3]));
        },
        {rand_tensor(3, 4, 49), rand_tensor(5, 4, 50), rand_tensor(5, 2, 51),
         rand_tensor(3, 2, 52)}) < kGradTol);

  CHECK(grad_check([](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, mul(t, linear(t, in[0], in[1], in[2]), in[3]));
        },
        {rand_tensor(3, 4, 53), rand_tensor(4, 2, 54), rand_tensor(1, 2, 55),
         rand_tensor(3, 2, 56)}) < kGradTol);
}

TEST_CASE("gradient checks for voxel ops") {
  VoxelGrid grid;
  grid.origin = Vec3{-1.0, -1.0, -1.0};
  grid.cell = 0.5;
  grid.g = 4;
  const std::vector<std::size_t> cells{0, 5, 5, 21, 63, 13};

  CHECK(grad_check([cells, grid](Tape* t, const std::vector<Tensor>& in) {
          const Tensor vox = voxel_scatter_mean(t, in[0], cells, grid);
          return sum_all(t, mul(t, vox, vox));
        },
        {rand_tensor(6, 2, 57)}) < kGradTol);

  // Points sit strictly inside the interpolation lattice with fractions away
  // from cell boundaries, so the FD probe stays on one smooth piece.
  const Tensor pts = Tensor::from_values(
      3, 3, {-0.6, -0.1, 0.3, 0.12, 0.4, -0.33, -0.4, 0.22, 0.17});
  CHECK(grad_check([grid](Tape* t, const std::vector<Tensor>& in) {
          const Tensor g = trilinear_gather(t, in[0], in[1], grid);
          return sum_all(t, mul(t, g, g));
        },
        {rand_tensor(64, 2, 58), pts}) < kGradTol);

  // Clamped points: voxel grads still flow, coordinate grads are zero.
  const Tensor far_pts = Tensor::from_values(1, 3, {50.0, 50.0, 50.0});
  CHECK(grad_check([grid](Tape* t, const std::vector<Tensor>& in) {
          return sum_all(t, trilinear_gather(t, in[0], in[1], grid));
        },
        {rand_tensor(64, 1, 59), far_pts}) < kGradTol);
}

TEST_CASE("gradient check for edge_conv") {
  const std::vector<Vec3> coords = rand_points(6, 60);
  CHECK(grad_check([coords](Tape* t, const std::vector<Tensor>& in) {
          const Tensor e = edge_conv(t, in[0], coords, 3, in[1], in[2]);
          return sum_all(t, mul(t, e, in[3]));
        },
        {rand_tensor(6, 2, 61), rand_tensor(4, 3, 62), rand_tensor(1, 3, 63, 0.3, 0.8),
         rand_tensor(6, 3, 64)}) < kGradTol);
}

TEST_CASE("backward accumulates deterministically") {
  // Two backward passes around zero_grad give identical gradients.
  Tensor a = rand_tensor(3, 3, 65);
  a.set_needs_grad(true);
  const auto run = [&a]() {
    Tape tape;
    Tensor loss = sum_all(&tape, mul(&tape, a, a));
    tape.backward(loss);
    return a.grad();
  };
  const std::vector<double> g1 = run();
  a.zero_grad();
  const std::vector<double> g2 = run();
  CHECK(g1 == g2);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(g1[i] == Catch::Approx(2.0 * a.values()[i]).margin(1e-12));
  }
}

TEST_CASE("tape rejects bad losses") {
  Tape tape;
  Tensor v = rand_tensor(2, 2, 66);
  v.set_needs_grad(true);
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
  Tensor s = Tensor::scalar(1.0);
  CHECK_THROWS_AS(tape.backward(s), std::logic_error);
}
