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

#include <cassert>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "ragaxai/nd/tensor.hpp"

namespace ragaxai::nd {

template <typename S>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename S>
class Var {
 public:
  Var() = default;
  Var(Graph<S>* graph, int id) : graph_(graph), id_(id) {}

  int id() const { return id_; }
  Graph<S>& graph() const { return *graph_; }
  const Tensor<S>& value() const { return graph_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return graph_->requires_grad(id_); }
  // Gradient accumulated by the last backward() call.
  const Tensor<S>& grad() const { return graph_->grad(id_); }

 private:
  Graph<S>* graph_ = nullptr;
  int id_ = -1;
};

enum class GradMode { kRecord, kNoGrad };

// Tape of operations. Nodes are appended in evaluation order, so reverse
// creation order is a valid reverse topological order and no cycle can exist.
//
// backward() resets every intermediate gradient before propagating, while
// gradients of leaves and bound parameters accumulate across calls until the
// caller zeroes them.
template <typename S>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor<S>& out_grad)>;

  explicit Graph(GradMode mode = GradMode::kRecord) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  GradMode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  Var<S> constant(Tensor<S> value) {
    auto node = std::make_unique<Node>();
    node->owned = std::move(value);
    return push(std::move(node));
  }

  Var<S> leaf(Tensor<S> value) {
    auto node = std::make_unique<Node>();
    node->owned = std::move(value);
    node->leaf = true;
    node->requires_grad = mode_ == GradMode::kRecord;
    return push(std::move(node));
  }

  // Trainable parameters take part in differentiation; their gradient is
  // accumulated into p.grad.
  Var<S> param(Parameter<S>& p) {
    auto node = std::make_unique<Node>();
    node->view = &p.value;
    node->leaf = true;
    if (p.trainable && mode_ == GradMode::kRecord) {
      node->param = &p;
      node->requires_grad = true;
    }
    return push(std::move(node));
  }

  // Read-only view; never differentiated.
  Var<S> param(const Parameter<S>& p) {
    auto node = std::make_unique<Node>();
    node->view = &p.value;
    return push(std::move(node));
  }

  // Appends an op result. The backward closure is kept only when some input
  // requires a gradient.
  Var<S> record(Tensor<S> value, std::initializer_list<Var<S>> inputs, BackwardFn fn) {
    auto node = std::make_unique<Node>();
    node->owned = std::move(value);
    if (mode_ == GradMode::kRecord) {
      for (const Var<S>& in : inputs) {
        assert(in.id() < static_cast<int>(nodes_.size()));
        if (nodes_[static_cast<std::size_t>(in.id())]->requires_grad) node->requires_grad = true;
      }
      if (node->requires_grad) node->backward = std::move(fn);
    }
    return push(std::move(node));
  }

  const Tensor<S>& value(int id) const {
    const Node& n = *nodes_.at(static_cast<std::size_t>(id));
    return n.view ? *n.view : n.owned;
  }

  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id))->requires_grad; }

  // Gradient buffer of a node, allocated (zeroed) on first use.
  Tensor<S>& grad(int id) {
    Node& n = *nodes_.at(static_cast<std::size_t>(id));
    if (n.param) {
      if (n.param->grad.size() != n.param->value.size()) n.param->zero_grad();
      return n.param->grad;
    }
    if (!n.grad_allocated) {
      n.grad = Tensor<S>(value(id).shape());
      n.grad_allocated = true;
    }
    return n.grad;
  }

  void backward(Var<S> loss) {
    if (loss.value().size() != 1) {
      throw Error("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
    }
    if (!requires_grad(loss.id())) throw Error("backward: loss does not depend on any differentiable input");
    for (auto& n : nodes_) {
      if (!n->leaf && n->grad_allocated) n->grad.fill(S(0));
    }
    grad(loss.id())[0] += S(1);
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = *nodes_[static_cast<std::size_t>(id)];
      if (n.backward && n.grad_allocated) n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Tensor<S> owned;
    const Tensor<S>* view = nullptr;
    Tensor<S> grad;
    bool grad_allocated = false;
    Parameter<S>* param = nullptr;
    bool leaf = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<S> push(std::unique_ptr<Node> node) {
    nodes_.push_back(std::move(node));
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  GradMode mode_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace ragaxai::nd
