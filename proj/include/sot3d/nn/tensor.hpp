#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sot3d/errors.hpp"
#include "sot3d/geom/vec3.hpp"

namespace sot3d::nn {

// A rank-2 float64 tensor with shared storage. Scalars are [1 x 1].
class Tensor {
 public:
  Tensor() : s_(std::make_shared<Storage>()) {}

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0, bool needs_grad = false)
      : s_(std::make_shared<Storage>()) {
    s_->rows = rows;
    s_->cols = cols;
    s_->val.assign(rows * cols, fill);
    s_->needs_grad = needs_grad;
    if (needs_grad) s_->grad.assign(rows * cols, 0.0);
  }

  static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) {
      throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape [" +
                       std::to_string(rows) + " x " + std::to_string(cols) + "]");
    }
    Tensor t;
    t.s_->rows = rows;
    t.s_->cols = cols;
    t.s_->val = std::move(values);
    return t;
  }

  static Tensor from_points(const std::vector<Vec3>& pts) {
    std::vector<double> v;
    v.reserve(pts.size() * 3);
    for (const Vec3& p : pts) {
      v.push_back(p.x);
      v.push_back(p.y);
      v.push_back(p.z);
    }
    return from_values(pts.size(), 3, std::move(v));
  }

  static Tensor scalar(double v) { return from_values(1, 1, {v}); }

  std::size_t rows() const { return s_->rows; }
  std::size_t cols() const { return s_->cols; }
  std::size_t size() const { return s_->val.size(); }

  const std::vector<double>& values() const { return s_->val; }
  std::vector<double>& mutable_values() { return s_->val; }

  bool needs_grad() const { return s_->needs_grad; }

  void set_needs_grad(bool on) {
    s_->needs_grad = on;
    if (on) s_->grad.assign(s_->val.size(), 0.0);
    else s_->grad.clear();
  }

  std::vector<double>& grad() const {
    if (!s_->needs_grad) throw std::logic_error("grad() on a tensor without gradient");
    return s_->grad;
  }

  void zero_grad() {
    if (s_->needs_grad) s_->grad.assign(s_->val.size(), 0.0);
  }

  double at(std::size_t r, std::size_t c) const { return s_->val[r * s_->cols + c]; }
  double item() const {
    if (size() != 1) throw ShapeError("item() on a non-scalar tensor");
    return s_->val[0];
  }

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  struct Storage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    bool needs_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

// Records backward closures during the forward pass; backward() replays them
// in reverse. Ops take a nullable Tape*: null means forward only.
class Tape {
 public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

  void backward(const Tensor& loss) {
    if (loss.size() != 1) throw ShapeError("backward: loss must be a scalar");
    if (!loss.needs_grad()) throw std::logic_error("backward: loss does not require grad");
    loss.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

namespace detail {

inline std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + " x " + std::to_string(t.cols()) + "]";
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

inline void guard_finite(const Tensor& t, const char* op) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

inline bool wants_grad(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs) {
    if (t->needs_grad()) return true;
  }
  return false;
}

}  // namespace detail
}  // namespace sot3d::nn
