#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sot3d/nn/params.hpp"

namespace sot3d::nn {

class Adam {
 public:
  Adam(Parameters& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const std::string& name : params.names()) {
      const std::size_t n = params.at(name).size();
      m_[name].assign(n, 0.0);
      v_[name].assign(n, 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (const std::string& name : params_.names()) {
      Tensor& p = params_.at(name);
      auto& m = m_.at(name);
      auto& v = v_.at(name);
      auto& val = p.mutable_values();
      const auto& g = p.grad();
      for (std::size_t i = 0; i < val.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        val[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      }
    }
  }

  void zero_grad() { params_.zero_grad(); }

  long long steps() const { return t_; }

 private:
  Parameters& params_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace sot3d::nn
