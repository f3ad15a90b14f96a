#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sot3d/nn/tensor.hpp"

namespace sot3d::nn {

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] + b.values()[i];
  detail::guard_finite(out, "add");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const auto& go = out.grad();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
      }
    });
  }
  return out;
}

inline Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] - b.values()[i];
  detail::guard_finite(out, "sub");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const auto& go = out.grad();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] * b.values()[i];
  detail::guard_finite(out, "mul");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const auto& go = out.grad();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * b.values()[i];
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * a.values()[i];
      }
    });
  }
  return out;
}

inline Tensor scale(Tape* tape, const Tensor& a, double c) {
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = c * a.values()[i];
  detail::guard_finite(out, "scale");
  if (out.needs_grad()) {
    tape->record([a, out, c]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += c * go[i];
    });
  }
  return out;
}

namespace detail {

inline void check_rowvec(const Tensor& a, const Tensor& v, const char* op) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    throw ShapeError(std::string(op) + ": row vector " + shape_str(v) + " does not match " +
                     shape_str(a));
  }
}

}  // namespace detail

inline Tensor add_rowvec(Tape* tape, const Tensor& a, const Tensor& v) {
  detail::check_rowvec(a, v, "add_rowvec");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &v}));
  auto& ov = out.mutable_values();
  const std::size_t C = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < C; ++c) ov[r * C + c] = a.values()[r * C + c] + v.values()[c];
  }
  detail::guard_finite(out, "add_rowvec");
  if (out.needs_grad()) {
    tape->record([a, v, out]() {
      const auto& go = out.grad();
      const std::size_t C = a.cols();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (v.needs_grad()) {
        auto& gv = v.grad();
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < C; ++c) gv[c] += go[r * C + c];
        }
      }
    });
  }
  return out;
}

inline Tensor sub_rowvec(Tape* tape, const Tensor& a, const Tensor& v) {
  detail::check_rowvec(a, v, "sub_rowvec");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &v}));
  auto& ov = out.mutable_values();
  const std::size_t C = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < C; ++c) ov[r * C + c] = a.values()[r * C + c] - v.values()[c];
  }
  detail::guard_finite(out, "sub_rowvec");
  if (out.needs_grad()) {
    tape->record([a, v, out]() {
      const auto& go = out.grad();
      const std::size_t C = a.cols();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (v.needs_grad()) {
        auto& gv = v.grad();
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < C; ++c) gv[c] -= go[r * C + c];
        }
      }
    });
  }
  return out;
}

inline Tensor mul_rowvec(Tape* tape, const Tensor& a, const Tensor& v) {
  detail::check_rowvec(a, v, "mul_rowvec");
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a, &v}));
  auto& ov = out.mutable_values();
  const std::size_t C = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < C; ++c) ov[r * C + c] = a.values()[r * C + c] * v.values()[c];
  }
  detail::guard_finite(out, "mul_rowvec");
  if (out.needs_grad()) {
    tape->record([a, v, out]() {
      const auto& go = out.grad();
      const std::size_t C = a.cols();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < C; ++c) ga[r * C + c] += go[r * C + c] * v.values()[c];
        }
      }
      if (v.needs_grad()) {
        auto& gv = v.grad();
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < C; ++c) gv[c] += go[r * C + c] * a.values()[r * C + c];
        }
      }
    });
  }
  return out;
}

inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + detail::shape_str(a) + " x " + detail::shape_str(b));
  }
  const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
  Tensor out(R, C, 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a.values()[r * K + k];
      for (std::size_t c = 0; c < C; ++c) ov[r * C + c] += av * b.values()[k * C + c];
    }
  }
  detail::guard_finite(out, "matmul");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
      const auto& go = out.grad();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += go[r * C + c] * b.values()[k * C + c];
            ga[r * K + k] += s;
          }
        }
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t k = 0; k < K; ++k) {
          for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < R; ++r) s += a.values()[r * K + k] * go[r * C + c];
            gb[k * C + c] += s;
          }
        }
      }
    });
  }
  return out;
}

// out = a * b^T, with b stored row-major [C x K].
inline Tensor matmul_nt(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + detail::shape_str(a) + " x " + detail::shape_str(b) + "^T");
  }
  const std::size_t R = a.rows(), K = a.cols(), C = b.rows();
  Tensor out(R, C, 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += a.values()[r * K + k] * b.values()[c * K + k];
      ov[r * C + c] = s;
    }
  }
  detail::guard_finite(out, "matmul_nt");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const std::size_t R = a.rows(), K = a.cols(), C = b.rows();
      const auto& go = out.grad();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += go[r * C + c] * b.values()[c * K + k];
            ga[r * K + k] += s;
          }
        }
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < R; ++r) s += go[r * C + c] * a.values()[r * K + k];
            gb[c * K + k] += s;
          }
        }
      }
    });
  }
  return out;
}

inline Tensor relu(Tape* tape, const Tensor& a) {
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  detail::guard_finite(out, "relu");
  if (out.needs_grad()) {
    tape->record([a, out]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (a.values()[i] > 0.0) ga[i] += go[i];
      }
    });
  }
  return out;
}

inline Tensor sigmoid(Tape* tape, const Tensor& a) {
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    const double x = a.values()[i];
    ov[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  detail::guard_finite(out, "sigmoid");
  if (out.needs_grad()) {
    tape->record([a, out]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) {
        const double y = out.values()[i];
        ga[i] += go[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

inline Tensor softmax_rows(Tape* tape, const Tensor& a) {
  Tensor out(a.rows(), a.cols(), 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  const std::size_t C = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double mx = a.values()[r * C];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, a.values()[r * C + c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double e = std::exp(a.values()[r * C + c] - mx);
      ov[r * C + c] = e;
      sum += e;
    }
    for (std::size_t c = 0; c < C; ++c) ov[r * C + c] /= sum;
  }
  detail::guard_finite(out, "softmax_rows");
  if (out.needs_grad()) {
    tape->record([a, out]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      const std::size_t C = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += go[r * C + c] * out.values()[r * C + c];
        for (std::size_t c = 0; c < C; ++c) {
          ga[r * C + c] += out.values()[r * C + c] * (go[r * C + c] - dot);
        }
      }
    });
  }
  return out;
}

inline Tensor layer_norm_rows(Tape* tape, const Tensor& a, const Tensor& gain, const Tensor& bias,
                              double eps = 1e-5) {
  detail::check_rowvec(a, gain, "layer_norm_rows");
  detail::check_rowvec(a, bias, "layer_norm_rows");
  const std::size_t R = a.rows(), C = a.cols();
  Tensor out(R, C, 0.0, detail::wants_grad(tape, {&a, &gain, &bias}));
  std::vector<double> xhat(R * C);
  std::vector<double> inv_std(R);
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < R; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < C; ++c) mean += a.values()[r * C + c];
    mean /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = a.values()[r * C + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(C);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < C; ++c) {
      xhat[r * C + c] = (a.values()[r * C + c] - mean) * inv_std[r];
      ov[r * C + c] = gain.values()[c] * xhat[r * C + c] + bias.values()[c];
    }
  }
  detail::guard_finite(out, "layer_norm_rows");
  if (out.needs_grad()) {
    tape->record([a, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std)]() {
      const auto& go = out.grad();
      const std::size_t R = a.rows(), C = a.cols();
      if (gain.needs_grad()) {
        auto& gg = gain.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t c = 0; c < C; ++c) gg[c] += go[r * C + c] * xhat[r * C + c];
        }
      }
      if (bias.needs_grad()) {
        auto& gb = bias.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t c = 0; c < C; ++c) gb[c] += go[r * C + c];
        }
      }
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t r = 0; r < R; ++r) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const double g = go[r * C + c] * gain.values()[c];
            sum_g += g;
            sum_gx += g * xhat[r * C + c];
          }
          const double inv_c = 1.0 / static_cast<double>(C);
          for (std::size_t c = 0; c < C; ++c) {
            const double g = go[r * C + c] * gain.values()[c];
            ga[r * C + c] +=
                inv_std[r] * (g - inv_c * sum_g - xhat[r * C + c] * inv_c * sum_gx);
          }
        }
      }
    });
  }
  return out;
}

inline Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: " + detail::shape_str(a) + " vs " + detail::shape_str(b));
  }
  const std::size_t R = a.rows(), Ca = a.cols(), Cb = b.cols();
  Tensor out(R, Ca + Cb, 0.0, detail::wants_grad(tape, {&a, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < Ca; ++c) ov[r * (Ca + Cb) + c] = a.values()[r * Ca + c];
    for (std::size_t c = 0; c < Cb; ++c) ov[r * (Ca + Cb) + Ca + c] = b.values()[r * Cb + c];
  }
  detail::guard_finite(out, "concat_cols");
  if (out.needs_grad()) {
    tape->record([a, b, out]() {
      const auto& go = out.grad();
      const std::size_t R = a.rows(), Ca = a.cols(), Cb = b.cols();
      if (a.needs_grad()) {
        auto& ga = a.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t c = 0; c < Ca; ++c) ga[r * Ca + c] += go[r * (Ca + Cb) + c];
        }
      }
      if (b.needs_grad()) {
        auto& gb = b.grad();
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t c = 0; c < Cb; ++c) gb[r * Cb + c] += go[r * (Ca + Cb) + Ca + c];
        }
      }
    });
  }
  return out;
}

inline Tensor concat_rows(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t C = parts.front().cols();
  std::size_t R = 0;
  bool want = false;
  for (const Tensor& p : parts) {
    if (p.cols() != C) {
      throw ShapeError("concat_rows: column mismatch " + detail::shape_str(parts.front()) +
                       " vs " + detail::shape_str(p));
    }
    R += p.rows();
    want = want || (tape && p.needs_grad());
  }
  Tensor out(R, C, 0.0, want);
  auto& ov = out.mutable_values();
  std::size_t row = 0;
  for (const Tensor& p : parts) {
    std::copy(p.values().begin(), p.values().end(), ov.begin() + static_cast<std::ptrdiff_t>(row * C));
    row += p.rows();
  }
  detail::guard_finite(out, "concat_rows");
  if (out.needs_grad()) {
    tape->record([parts, out]() {
      const auto& go = out.grad();
      const std::size_t C = out.cols();
      std::size_t row = 0;
      for (const Tensor& p : parts) {
        if (p.needs_grad()) {
          auto& gp = p.grad();
          for (std::size_t i = 0; i < p.size(); ++i) gp[i] += go[row * C + i];
        }
        row += p.rows();
      }
    });
  }
  return out;
}

inline Tensor gather_rows(Tape* tape, const Tensor& a, const std::vector<std::size_t>& idx) {
  for (std::size_t i : idx) {
    if (i >= a.rows()) throw ShapeError("gather_rows: index out of range");
  }
  const std::size_t C = a.cols();
  Tensor out(idx.size(), C, 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < C; ++c) ov[r * C + c] = a.values()[idx[r] * C + c];
  }
  detail::guard_finite(out, "gather_rows");
  if (out.needs_grad()) {
    tape->record([a, out, idx]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      const std::size_t C = a.cols();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < C; ++c) ga[idx[r] * C + c] += go[r * C + c];
      }
    });
  }
  return out;
}

inline Tensor slice_cols(Tape* tape, const Tensor& a, std::size_t c0, std::size_t c1) {
  if (c0 >= c1 || c1 > a.cols()) throw ShapeError("slice_cols: bad column range");
  const std::size_t R = a.rows(), C = a.cols(), W = c1 - c0;
  Tensor out(R, W, 0.0, detail::wants_grad(tape, {&a}));
  auto& ov = out.mutable_values();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < W; ++c) ov[r * W + c] = a.values()[r * C + c0 + c];
  }
  detail::guard_finite(out, "slice_cols");
  if (out.needs_grad()) {
    tape->record([a, out, c0]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      const std::size_t C = a.cols(), W = out.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < W; ++c) ga[r * C + c0 + c] += go[r * W + c];
      }
    });
  }
  return out;
}

// Max over contiguous row groups of size g: [N*g x C] -> [N x C].
inline Tensor group_max(Tape* tape, const Tensor& a, std::size_t g) {
  if (g == 0 || a.rows() % g != 0) {
    throw ShapeError("group_max: rows " + std::to_string(a.rows()) + " not divisible by group " +
                     std::to_string(g));
  }
  const std::size_t N = a.rows() / g, C = a.cols();
  Tensor out(N, C, 0.0, detail::wants_grad(tape, {&a}));
  std::vector<std::size_t> arg(N * C);
  auto& ov = out.mutable_values();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = n * g;
      double bv = a.values()[best * C + c];
      for (std::size_t j = 1; j < g; ++j) {
        const double v = a.values()[(n * g + j) * C + c];
        if (v > bv) {
          bv = v;
          best = n * g + j;
        }
      }
      ov[n * C + c] = bv;
      arg[n * C + c] = best;
    }
  }
  detail::guard_finite(out, "group_max");
  if (out.needs_grad()) {
    tape->record([a, out, arg = std::move(arg)]() {
      const auto& go = out.grad();
      auto& ga = a.grad();
      const std::size_t C = a.cols();
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[arg[i] * C + i % C] += go[i];
      }
    });
  }
  return out;
}

inline Tensor sum_all(Tape* tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor out(1, 1, s, detail::wants_grad(tape, {&a}));
  detail::guard_finite(out, "sum_all");
  if (out.needs_grad()) {
    tape->record([a, out]() {
      const double g = out.grad()[0];
      auto& ga = a.grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  }
  return out;
}

inline Tensor mean_all(Tape* tape, const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean_all: empty tensor");
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out(1, 1, s * inv, detail::wants_grad(tape, {&a}));
  detail::guard_finite(out, "mean_all");
  if (out.needs_grad()) {
    tape->record([a, out, inv]() {
      const double g = out.grad()[0] * inv;
      auto& ga = a.grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  }
  return out;
}

// Mean binary cross entropy on logits, computed in the stable max-form.
inline Tensor bce_with_logits_mean(Tape* tape, const Tensor& logits,
                                   const std::vector<double>& targets) {
  if (logits.size() != targets.size()) {
    throw ShapeError("bce_with_logits_mean: " + std::to_string(targets.size()) +
                     " targets for tensor " + detail::shape_str(logits));
  }
  if (logits.size() == 0) throw ShapeError("bce_with_logits_mean: empty input");
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double z = logits.values()[i];
    const double t = targets[i];
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  const double inv = 1.0 / static_cast<double>(targets.size());
  Tensor out(1, 1, loss * inv, detail::wants_grad(tape, {&logits}));
  detail::guard_finite(out, "bce_with_logits_mean");
  if (out.needs_grad()) {
    tape->record([logits, out, targets, inv]() {
      const double g = out.grad()[0] * inv;
      auto& gl = logits.grad();
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double z = logits.values()[i];
        const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        gl[i] += g * (s - targets[i]);
      }
    });
  }
  return out;
}

// sum_i w_i * sum_c a[i,c]^2 / denom, for row weights w.
inline Tensor weighted_sq_sum(Tape* tape, const Tensor& a, const std::vector<double>& row_weights,
                              double denom) {
  if (row_weights.size() != a.rows()) {
    throw ShapeError("weighted_sq_sum: " + std::to_string(row_weights.size()) +
                     " weights for tensor " + detail::shape_str(a));
  }
  if (!(denom > 0.0)) throw std::invalid_argument("weighted_sq_sum: denominator must be positive");
  const std::size_t C = a.cols();
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (row_weights[r] == 0.0) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double v = a.values()[r * C + c];
      row += v * v;
    }
    s += row_weights[r] * row;
  }
  Tensor out(1, 1, s / denom, detail::wants_grad(tape, {&a}));
  detail::guard_finite(out, "weighted_sq_sum");
  if (out.needs_grad()) {
    tape->record([a, out, row_weights, denom]() {
      const double g = out.grad()[0] / denom;
      auto& ga = a.grad();
      const std::size_t C = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        if (row_weights[r] == 0.0) continue;
        for (std::size_t c = 0; c < C; ++c) {
          ga[r * C + c] += g * 2.0 * a.values()[r * C + c] * row_weights[r];
        }
      }
    });
  }
  return out;
}

// Mean smooth L1 (beta = 1) between a tensor and fixed targets.
inline Tensor smooth_l1_mean(Tape* tape, const Tensor& a, const std::vector<double>& targets) {
  if (a.size() != targets.size()) {
    throw ShapeError("smooth_l1_mean: " + std::to_string(targets.size()) + " targets for tensor " +
                     detail::shape_str(a));
  }
  if (a.size() == 0) throw ShapeError("smooth_l1_mean: empty input");
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = a.values()[i] - targets[i];
    loss += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  const double inv = 1.0 / static_cast<double>(targets.size());
  Tensor out(1, 1, loss * inv, detail::wants_grad(tape, {&a}));
  detail::guard_finite(out, "smooth_l1_mean");
  if (out.needs_grad()) {
    tape->record([a, out, targets, inv]() {
      const double g = out.grad()[0] * inv;
      auto& ga = a.grad();
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double d = a.values()[i] - targets[i];
        ga[i] += g * std::clamp(d, -1.0, 1.0);
      }
    });
  }
  return out;
}

// 1D convolution along rows with zero padding; w is [Cout x (k*Cin)].
inline Tensor conv1d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b,
                     std::size_t width) {
  if (width % 2 == 0 || width == 0) throw ShapeError("conv1d: width must be odd");
  const std::size_t N = x.rows(), Cin = x.cols();
  if (w.cols() != width * Cin) {
    throw ShapeError("conv1d: weight " + detail::shape_str(w) + " does not match width " +
                     std::to_string(width) + " x " + std::to_string(Cin));
  }
  const std::size_t Cout = w.rows();
  if (b.rows() != 1 || b.cols() != Cout) throw ShapeError("conv1d: bad bias shape");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
  Tensor out(N, Cout, 0.0, detail::wants_grad(tape, {&x, &w, &b}));
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t o = 0; o < Cout; ++o) {
      double s = b.values()[o];
      for (std::size_t t = 0; t < width; ++t) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(t) - half;
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(N)) continue;
        for (std::size_t c = 0; c < Cin; ++c) {
          s += w.values()[o * w.cols() + t * Cin + c] * x.values()[static_cast<std::size_t>(j) * Cin + c];
        }
      }
      ov[i * Cout + o] = s;
    }
  }
  detail::guard_finite(out, "conv1d");
  if (out.needs_grad()) {
    tape->record([x, w, b, out, width, half]() {
      const std::size_t N = x.rows(), Cin = x.cols(), Cout = w.rows();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t o = 0; o < Cout; ++o) {
          const double g = go[i * Cout + o];
          if (b.needs_grad()) b.grad()[o] += g;
          for (std::size_t t = 0; t < width; ++t) {
            const std::ptrdiff_t j =
                static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(t) - half;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(N)) continue;
            for (std::size_t c = 0; c < Cin; ++c) {
              if (w.needs_grad()) {
                w.grad()[o * w.cols() + t * Cin + c] +=
                    g * x.values()[static_cast<std::size_t>(j) * Cin + c];
              }
              if (x.needs_grad()) {
                x.grad()[static_cast<std::size_t>(j) * Cin + c] +=
                    g * w.values()[o * w.cols() + t * Cin + c];
              }
            }
          }
        }
      }
    });
  }
  return out;
}

inline Tensor linear(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(tape, matmul(tape, x, w), b);
}

// Scaled dot-product attention over one head.
inline Tensor attention(Tape* tape, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw ShapeError("attention: q " + detail::shape_str(q) + ", k " + detail::shape_str(k) +
                     ", v " + detail::shape_str(v));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor scores = scale(tape, matmul_nt(tape, q, k), inv_sqrt);
  return matmul(tape, softmax_rows(tape, scores), v);
}

}  // namespace sot3d::nn
