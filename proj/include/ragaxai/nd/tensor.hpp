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
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ragaxai/common.hpp"

namespace ragaxai::nd {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

// Storage handed to Eigen. A fixed alignment keeps vectorized reductions
// summing in the same order wherever the allocator places the buffer.
template <typename S>
using Buffer = std::vector<S, Eigen::aligned_allocator<S>>;

// Dense row-major n-d array.
template <typename S>
class Tensor {
 public:
  using value_type = S;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, const std::vector<S>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (data_.size() != shape_size(shape_)) {
      throw Error("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i < 0 ? rank() + i : i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  Buffer<S>& values() { return data_; }
  const Buffer<S>& values() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  S operator[](std::size_t i) const { return data_[i]; }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  // Same data, new shape of equal size.
  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw Error("Tensor::reshaped: " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](S v) { return static_cast<T>(v); });
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  Buffer<S> data_;
};

// A named, optionally trainable tensor owned by a model. Graph nodes bound to a
// trainable parameter accumulate their gradient into `grad`.
template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<S> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(train) {}

  void zero_grad() {
    if (grad.size() != value.size()) grad = Tensor<S>(value.shape());
    grad.fill(S(0));
  }

  template <typename T>
  Parameter<T> cast() const {
    Parameter<T> out(name, value.template cast<T>(), trainable);
    return out;
  }
};

}  // namespace ragaxai::nd
