#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sot3d/nn/tensor.hpp"

namespace sot3d::nn {

// Central finite-difference check of reverse-mode gradients. `fn` must map
// the inputs to a scalar and be pure; tape == nullptr runs forward only.
// Returns the max relative error, |a - n| / max(|a|, |n|, 1e-8).
inline double grad_check(
    const std::function<Tensor(Tape*, const std::vector<Tensor>&)>& fn,
    std::vector<Tensor> inputs, double eps = 1e-6) {
  for (Tensor& t : inputs) t.set_needs_grad(true);
  Tape tape;
  Tensor loss = fn(&tape, inputs);
  if (loss.size() != 1) throw ShapeError("grad_check: fn must return a scalar");
  tape.backward(loss);

  double worst = 0.0;
  for (Tensor& t : inputs) {
    const std::vector<double> analytic = t.grad();
    auto& val = t.mutable_values();
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double keep = val[i];
      val[i] = keep + eps;
      const double up = fn(nullptr, inputs).item();
      val[i] = keep - eps;
      const double dn = fn(nullptr, inputs).item();
      val[i] = keep;
      const double numeric = (up - dn) / (2.0 * eps);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace sot3d::nn
