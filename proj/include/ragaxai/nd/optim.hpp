/* Copyright 2026 The ragaxai Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cmath>
#include <vector>

#include "ragaxai/nd/tensor.hpp"

namespace ragaxai::nd {

// Adam with bias correction.
template <typename S>
class Adam {
 public:
  explicit Adam(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-7)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(const std::vector<Parameter<S>*>& params) {
    if (first_.size() != params.size()) {
      first_.assign(params.size(), {});
      second_.assign(params.size(), {});
      for (std::size_t i = 0; i < params.size(); ++i) {
        first_[i].assign(params[i]->value.size(), 0.0);
        second_[i].assign(params[i]->value.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter<S>& p = *params[i];
      if (!p.trainable || p.grad.size() != p.value.size()) continue;
      std::vector<double>& m = first_[i];
      std::vector<double>& v = second_[i];
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double g = p.grad[k];
        m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
        v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
        const double update = lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        p.value[k] = static_cast<S>(p.value[k] - update);
      }
    }
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> first_, second_;
};

}  // namespace ragaxai::nd
