#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sot3d/geom/vec3.hpp"
#include "sot3d/nn/ops.hpp"

namespace sot3d::nn {

// Cubic g x g x g grid over [origin, origin + g*cell]^3. Cells are flattened
// as (iz * g + iy) * g + ix; cell centers sit at origin + (i + 0.5) * cell.
struct VoxelGrid {
  Vec3 origin;
  double cell = 1.0;
  std::size_t g = 8;

  std::size_t cells() const { return g * g * g; }

  std::size_t cell_index(const Vec3& p) const {
    std::size_t idx[3];
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] - origin[a]) / cell;
      const long long i = static_cast<long long>(std::floor(u));
      idx[a] = static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(g) - 1));
    }
    return (idx[2] * g + idx[1]) * g + idx[0];
  }
};

// Mean of point features per occupied cell; empty cells stay zero.
inline Tensor voxel_scatter_mean(Tape* tape, const Tensor& f, const std::vector<std::size_t>& cells,
                                 const VoxelGrid& grid) {
  if (f.rows() != cells.size()) {
    throw ShapeError("voxel_scatter_mean: " + std::to_string(cells.size()) +
                     " cell indices for features " + detail::shape_str(f));
  }
  const std::size_t C = f.cols(), N = grid.cells();
  std::vector<double> counts(N, 0.0);
  for (std::size_t cell : cells) {
    if (cell >= N) throw ShapeError("voxel_scatter_mean: cell index out of range");
    counts[cell] += 1.0;
  }
  Tensor out(N, C, 0.0, detail::wants_grad(tape, {&f}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const double inv = 1.0 / counts[cells[r]];
    for (std::size_t c = 0; c < C; ++c) ov[cells[r] * C + c] += inv * f.values()[r * C + c];
  }
  detail::guard_finite(out, "voxel_scatter_mean");
  if (out.needs_grad()) {
    tape->record([f, out, cells, counts = std::move(counts)]() {
      const auto& go = out.grad();
      auto& gf = f.grad();
      const std::size_t C = f.cols();
      for (std::size_t r = 0; r < f.rows(); ++r) {
        const double inv = 1.0 / counts[cells[r]];
        for (std::size_t c = 0; c < C; ++c) gf[r * C + c] += inv * go[cells[r] * C + c];
      }
    });
  }
  return out;
}

// Dense 3x3x3 convolution over the voxel grid with zero padding.
// w is [Cout x (27*Cin)]; neighbor order is lexicographic in (dz, dy, dx).
inline Tensor conv3d(Tape* tape, const Tensor& vox, const Tensor& w, const Tensor& b,
                     std::size_t g) {
  if (vox.rows() != g * g * g) {
    throw ShapeError("conv3d: grid " + std::to_string(g) + "^3 does not match " +
                     detail::shape_str(vox));
  }
  const std::size_t Cin = vox.cols(), Cout = w.rows();
  if (w.cols() != 27 * Cin) {
    throw ShapeError("conv3d: weight " + detail::shape_str(w) + " for Cin " + std::to_string(Cin));
  }
  if (b.rows() != 1 || b.cols() != Cout) throw ShapeError("conv3d: bad bias shape");
  Tensor out(vox.rows(), Cout, 0.0, detail::wants_grad(tape, {&vox, &w, &b}));
  auto& ov = out.mutable_values();
  const auto flat = [g](std::size_t x, std::size_t y, std::size_t z) {
    return (z * g + y) * g + x;
  };
  for (std::size_t z = 0; z < g; ++z) {
    for (std::size_t y = 0; y < g; ++y) {
      for (std::size_t x = 0; x < g; ++x) {
        const std::size_t o_row = flat(x, y, z);
        for (std::size_t o = 0; o < Cout; ++o) ov[o_row * Cout + o] = b.values()[o];
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const long long nx = static_cast<long long>(x) + dx;
              const long long ny = static_cast<long long>(y) + dy;
              const long long nz = static_cast<long long>(z) + dz;
              if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long long>(g) ||
                  ny >= static_cast<long long>(g) || nz >= static_cast<long long>(g)) {
                continue;
              }
              const std::size_t n_row = flat(static_cast<std::size_t>(nx),
                                             static_cast<std::size_t>(ny),
                                             static_cast<std::size_t>(nz));
              const std::size_t tap = static_cast<std::size_t>(((dz + 1) * 3 + (dy + 1)) * 3 +
                                                               (dx + 1));
              for (std::size_t o = 0; o < Cout; ++o) {
                double s = 0.0;
                for (std::size_t c = 0; c < Cin; ++c) {
                  s += w.values()[o * w.cols() + tap * Cin + c] * vox.values()[n_row * Cin + c];
                }
                ov[o_row * Cout + o] += s;
              }
            }
          }
        }
      }
    }
  }
  detail::guard_finite(out, "conv3d");
  if (out.needs_grad()) {
    tape->record([vox, w, b, out, g, flat]() {
      const std::size_t Cin = vox.cols(), Cout = w.rows();
      const auto& go = out.grad();
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t r = 0; r < out.rows(); ++r) {
          for (std::size_t o = 0; o < Cout; ++o) gb[o] += go[r * Cout + o];
        }
      }
      for (std::size_t z = 0; z < g; ++z) {
        for (std::size_t y = 0; y < g; ++y) {
          for (std::size_t x = 0; x < g; ++x) {
            const std::size_t o_row = flat(x, y, z);
            for (int dz = -1; dz <= 1; ++dz) {
              for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                  const long long nx = static_cast<long long>(x) + dx;
                  const long long ny = static_cast<long long>(y) + dy;
                  const long long nz = static_cast<long long>(z) + dz;
                  if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long long>(g) ||
                      ny >= static_cast<long long>(g) || nz >= static_cast<long long>(g)) {
                    continue;
                  }
                  const std::size_t n_row = flat(static_cast<std::size_t>(nx),
                                                 static_cast<std::size_t>(ny),
                                                 static_cast<std::size_t>(nz));
                  const std::size_t tap = static_cast<std::size_t>(((dz + 1) * 3 + (dy + 1)) * 3 +
                                                                   (dx + 1));
                  for (std::size_t o = 0; o < Cout; ++o) {
                    const double g_out = go[o_row * Cout + o];
                    if (g_out == 0.0) continue;
                    for (std::size_t c = 0; c < Cin; ++c) {
                      if (w.needs_grad()) {
                        w.grad()[o * w.cols() + tap * Cin + c] +=
                            g_out * vox.values()[n_row * Cin + c];
                      }
                      if (vox.needs_grad()) {
                        vox.grad()[n_row * Cin + c] +=
                            g_out * w.values()[o * w.cols() + tap * Cin + c];
                      }
                    }
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

// Trilinear interpolation of voxel features at point locations. Gradients
// flow to both the voxel features and the point coordinates.
inline Tensor trilinear_gather(Tape* tape, const Tensor& vox, const Tensor& coords,
                               const VoxelGrid& grid) {
  if (coords.cols() != 3) throw ShapeError("trilinear_gather: coords must be [N x 3]");
  if (vox.rows() != grid.cells()) {
    throw ShapeError("trilinear_gather: grid does not match " + detail::shape_str(vox));
  }
  const std::size_t N = coords.rows(), C = vox.cols(), g = grid.g;
  if (g < 2) throw std::invalid_argument("trilinear_gather: grid must have g >= 2");

  struct Sample {
    std::size_t base[3];
    double frac[3];
    bool interior[3];  // false when clamped: zero coordinate gradient
  };
  std::vector<Sample> samples(N);
  for (std::size_t i = 0; i < N; ++i) {
    Sample& s = samples[i];
    for (int a = 0; a < 3; ++a) {
      const double u = (coords.values()[i * 3 + static_cast<std::size_t>(a)] - grid.origin[a]) /
                           grid.cell - 0.5;
      double uc = u;
      bool interior = true;
      if (uc <= 0.0) {
        uc = 0.0;
        interior = false;
      } else if (uc >= static_cast<double>(g - 1)) {
        uc = static_cast<double>(g - 1);
        interior = false;
      }
      std::size_t base = static_cast<std::size_t>(std::floor(uc));
      if (base > g - 2) base = g - 2;
      s.base[a] = base;
      s.frac[a] = uc - static_cast<double>(base);
      s.interior[a] = interior;
    }
  }

  const auto flat = [g](std::size_t x, std::size_t y, std::size_t z) {
    return (z * g + y) * g + x;
  };
  Tensor out(N, C, 0.0, detail::wants_grad(tape, {&vox, &coords}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < N; ++i) {
    const Sample& s = samples[i];
    for (int corner = 0; corner < 8; ++corner) {
      const int cx = corner & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
      const double wgt = (cx ? s.frac[0] : 1.0 - s.frac[0]) * (cy ? s.frac[1] : 1.0 - s.frac[1]) *
                         (cz ? s.frac[2] : 1.0 - s.frac[2]);
      if (wgt == 0.0) continue;
      const std::size_t row = flat(s.base[0] + static_cast<std::size_t>(cx),
                                   s.base[1] + static_cast<std::size_t>(cy),
                                   s.base[2] + static_cast<std::size_t>(cz));
      for (std::size_t c = 0; c < C; ++c) ov[i * C + c] += wgt * vox.values()[row * C + c];
    }
  }
  detail::guard_finite(out, "trilinear_gather");
  if (out.needs_grad()) {
    tape->record([vox, coords, out, samples = std::move(samples), grid, flat]() {
      const std::size_t N = coords.rows(), C = vox.cols();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < N; ++i) {
        const Sample& s = samples[i];
        for (int corner = 0; corner < 8; ++corner) {
          const int cc[3] = {corner & 1, (corner >> 1) & 1, (corner >> 2) & 1};
          const double wa[3] = {cc[0] ? s.frac[0] : 1.0 - s.frac[0],
                                cc[1] ? s.frac[1] : 1.0 - s.frac[1],
                                cc[2] ? s.frac[2] : 1.0 - s.frac[2]};
          const std::size_t row = flat(s.base[0] + static_cast<std::size_t>(cc[0]),
                                       s.base[1] + static_cast<std::size_t>(cc[1]),
                                       s.base[2] + static_cast<std::size_t>(cc[2]));
          double dot_gv = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const double g_out = go[i * C + c];
            if (vox.needs_grad()) vox.grad()[row * C + c] += wa[0] * wa[1] * wa[2] * g_out;
            dot_gv += g_out * vox.values()[row * C + c];
          }
          if (coords.needs_grad()) {
            auto& gc = coords.grad();
            for (int a = 0; a < 3; ++a) {
              if (!s.interior[a]) continue;
              const double dw = (cc[a] ? 1.0 : -1.0) * wa[(a + 1) % 3] * wa[(a + 2) % 3];
              gc[i * 3 + static_cast<std::size_t>(a)] += dot_gv * dw / grid.cell;
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace sot3d::nn
