#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ttk/tensor.hpp"

namespace ttk::optim {

// AdamW: decoupled weight decay applied directly to parameters, then the
// bias-corrected Adam step. Deterministic given parameter order.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<tc::Tensor<T>> params, double lr, double weight_decay = 0.0, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    state_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      state_[i].m.assign(params_[i].numel(), T(0));
      state_[i].v.assign(params_[i].numel(), T(0));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad()) continue;
      auto& vals = p.values();
      const auto& g = p.grad();
      auto& st = state_[i];
      for (size_t j = 0; j < vals.size(); ++j) {
        if (wd_ != 0.0) vals[j] -= static_cast<T>(lr_ * wd_) * vals[j];
        st.m[j] = static_cast<T>(beta1_) * st.m[j] + static_cast<T>(1.0 - beta1_) * g[j];
        st.v[j] = static_cast<T>(beta2_) * st.v[j] + static_cast<T>(1.0 - beta2_) * g[j] * g[j];
        double mhat = static_cast<double>(st.m[j]) / bc1;
        double vhat = static_cast<double>(st.v[j]) / bc2;
        vals[j] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  const std::vector<tc::Tensor<T>>& params() const { return params_; }
  int64_t step_count() const { return t_; }

 private:
  struct State {
    std::vector<T> m, v;
  };

  std::vector<tc::Tensor<T>> params_;
  std::vector<State> state_;
  double lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace ttk::optim
