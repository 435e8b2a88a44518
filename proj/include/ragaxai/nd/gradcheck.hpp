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

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "ragaxai/nd/graph.hpp"

namespace ragaxai::nd {

struct GradCheckReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> rel_error;  // |a - n| / max(|a|, |n|, 1e-6)

  double max_rel_error() const {
    return rel_error.empty() ? 0.0 : *std::max_element(rel_error.begin(), rel_error.end());
  }
  double fraction_within(double tol) const {
    if (rel_error.empty()) return 1.0;
    const auto ok = std::count_if(rel_error.begin(), rel_error.end(), [tol](double e) { return e <= tol; });
    return static_cast<double>(ok) / static_cast<double>(rel_error.size());
  }
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

template <typename S>
using ScalarFn = std::function<Var<S>(Graph<S>&, Var<S>)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / 2 eps against the
// reverse-mode gradient of f at x. `indices` selects the checked elements
// (all when empty).
template <typename S>
GradCheckReport finite_diff_check(const ScalarFn<S>& f, const Tensor<S>& x, S eps = S(1e-3),
                                  std::vector<std::size_t> indices = {}) {
  if (indices.empty()) {
    indices.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) indices[i] = i;
  }
  Tensor<S> analytic(x.shape());
  {
    Graph<S> g;
    Var<S> in = g.leaf(x);
    Var<S> out = f(g, in);
    if (out.requires_grad()) {
      g.backward(out);
      analytic = in.grad();
    }
  }
  auto eval = [&](const Tensor<S>& at) {
    Graph<S> g(GradMode::kNoGrad);
    return static_cast<double>(f(g, g.leaf(at)).value()[0]);
  };
  GradCheckReport report;
  Tensor<S> probe = x;
  for (std::size_t i : indices) {
    const S original = probe[i];
    probe[i] = original + eps;
    const double up = eval(probe);
    probe[i] = original - eps;
    const double down = eval(probe);
    probe[i] = original;
    const double numeric = (up - down) / (2.0 * static_cast<double>(eps));
    report.analytic.push_back(analytic[i]);
    report.numeric.push_back(numeric);
    report.rel_error.push_back(relative_error(analytic[i], numeric));
  }
  return report;
}

// Same check against parameters: `f` builds the loss from the parameters it
// closes over. `entries` lists (parameter, element) pairs to probe. Parameter
// gradients are zeroed first.
template <typename S>
GradCheckReport finite_diff_check_params(const std::function<Var<S>(Graph<S>&)>& f,
                                         const std::vector<Parameter<S>*>& params,
                                         const std::vector<std::pair<std::size_t, std::size_t>>& entries,
                                         S eps = S(1e-3)) {
  for (Parameter<S>* p : params) p->zero_grad();
  {
    Graph<S> g;
    g.backward(f(g));
  }
  std::vector<double> analytic;
  for (auto [p, e] : entries) analytic.push_back(params.at(p)->grad[e]);
  auto eval = [&] {
    Graph<S> g(GradMode::kNoGrad);
    return static_cast<double>(f(g).value()[0]);
  };
  GradCheckReport report;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto [p, e] = entries[k];
    S& slot = params[p]->value[e];
    const S original = slot;
    slot = original + eps;
    const double up = eval();
    slot = original - eps;
    const double down = eval();
    slot = original;
    const double numeric = (up - down) / (2.0 * static_cast<double>(eps));
    report.analytic.push_back(analytic[k]);
    report.numeric.push_back(numeric);
    report.rel_error.push_back(relative_error(analytic[k], numeric));
  }
  return report;
}

}  // namespace ragaxai::nd
