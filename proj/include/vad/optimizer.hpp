#pragma once

#include <cmath>
#include <vector>

#include "vad/layers.hpp"
#include "vad/tensor.hpp"

namespace vad {

// Adam with bias correction. Moment buffers are kept in double regardless of
// the parameter scalar type so long runs do not accumulate rounding drift.
template <typename T>
class Adam {
 public:
  explicit Adam(const ParamRegistry<T>& reg, double lr = 1e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(static_cast<size_t>(reg.num_params()));
    v_.reserve(static_cast<size_t>(reg.num_params()));
    for (int i = 0; i < reg.num_params(); ++i) {
      m_.emplace_back(reg.param(i).data.size(), 0.0);
      v_.emplace_back(reg.param(i).data.size(), 0.0);
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(ParamRegistry<T>& reg, const GradStore<T>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (int p = 0; p < reg.num_params(); ++p) {
      Tensor<T>& w = reg.param(p);
      const Tensor<T>& g = grads.grad(p);
      std::vector<double>& m = m_[static_cast<size_t>(p)];
      std::vector<double>& v = v_[static_cast<size_t>(p)];
      for (size_t i = 0; i < w.data.size(); ++i) {
        const double gi = static_cast<double>(g.data[i]);
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w.data[i] = static_cast<T>(w.data[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace vad
