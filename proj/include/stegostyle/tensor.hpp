// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "stegostyle/common.hpp"

namespace stego::nn {

using Shape = std::vector<int>;

inline int numel(const Shape& s) {
  int n = 1;
  for (int d : s) {
    if (d <= 0) fail("shape axes must be positive, got " + std::to_string(d));
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ")";
  return os.str();
}

/// When enabled, every op scans its output for NaN/Inf. Used by the test
/// suites; off by default in training loops, which check losses per step.
inline bool& finite_checks() {
  static bool enabled = false;
  return enabled;
}

/// Graph recording switch. Inference paths turn it off so forward passes
/// allocate no backward closures.
inline bool& grad_enabled() {
  static bool enabled = true;
  return enabled;
}

/// RAII scope: no graph is recorded while alive.
struct NoGrad {
  bool prev;
  NoGrad() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGrad() { grad_enabled() = prev; }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;  // sized lazily
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // reads own grad, accumulates into parents

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

}  // namespace detail

/// Value-semantics handle to an autodiff graph node. Ops record the graph;
/// backward() runs reverse-mode accumulation from a scalar and then frees
/// the recorded graph, leaving gradients on the leaves.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const size_t n = static_cast<size_t>(numel(shape));
    return Tensor(std::vector<double>(n, 0.0), std::move(shape), requires_grad);
  }

  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    const size_t n = static_cast<size_t>(numel(shape));
    return Tensor(std::vector<double>(n, v), std::move(shape), requires_grad);
  }

  static Tensor from(std::vector<double> values, Shape shape, bool requires_grad = false) {
    return Tensor(std::move(values), std::move(shape), requires_grad);
  }

  static Tensor scalar(double v) { return from({v}, {1}); }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  int size() const { return static_cast<int>(node().val.size()); }
  const std::vector<double>& values() const { return node().val; }
  std::vector<double>& mutable_values() { return node().val; }
  bool requires_grad() const { return node().requires_grad; }

  double item() const {
    if (size() != 1) fail("item() on non-scalar tensor " + shape_str(shape()));
    return node().val[0];
  }

  const std::vector<double>& grad() const {
    auto& n = const_cast<detail::Node&>(node());
    n.ensure_grad();
    return n.grad;
  }

  void zero_grad() {
    auto& n = node();
    n.grad.assign(n.val.size(), 0.0);
  }

  /// Same values, no graph history, no gradient requirement.
  Tensor detach() const { return Tensor(node().val, node().shape, false); }

  /// Reverse-mode accumulation from this scalar. Frees the recorded graph
  /// (parent links and closures) once done; leaf gradients remain.
  void backward() {
    auto& root = node();
    if (root.val.size() != 1) fail("backward() requires a scalar root, got " + shape_str(root.shape));
    if (!root.requires_grad) fail("backward() on a tensor with no gradient path");

    std::vector<detail::Node*> topo;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, size_t>> stack;
    stack.emplace_back(&root, 0);
    seen.insert(&root);
    while (!stack.empty()) {
      auto& [cur, idx] = stack.back();
      if (idx < cur->parents.size()) {
        detail::Node* p = cur->parents[idx++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        topo.push_back(cur);
        stack.pop_back();
      }
    }
    // topo is child-after-parent; walk it backwards
    root.ensure_grad();
    root.grad[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      detail::Node* n = *it;
      if (n->backprop) {
        n->ensure_grad();
        n->backprop(*n);
      }
    }
    for (detail::Node* n : topo) {
      n->backprop = nullptr;
      n->parents.clear();
    }
  }

  // --- graph construction (used by ops.hpp) ---

  static Tensor make(Shape shape, std::vector<double> values, bool requires_grad,
                     std::vector<Tensor> parents,
                     std::function<void(detail::Node&)> backprop) {
    requires_grad = requires_grad && grad_enabled();
    Tensor t(std::move(values), std::move(shape), requires_grad);
    if (requires_grad) {
      auto& n = t.node();
      n.parents.reserve(parents.size());
      for (auto& p : parents) n.parents.push_back(p.n_);
      n.backprop = std::move(backprop);
    }
    if (finite_checks()) t.check_finite();
    return t;
  }

  detail::Node& node() {
    if (!n_) fail("use of an undefined tensor");
    return *n_;
  }
  const detail::Node& node() const {
    if (!n_) fail("use of an undefined tensor");
    return *n_;
  }
  std::shared_ptr<detail::Node> node_ptr() const { return n_; }

  void check_finite() const {
    for (double v : node().val)
      if (!std::isfinite(v)) fail("non-finite value in tensor " + shape_str(shape()));
  }

 private:
  Tensor(std::vector<double> values, Shape shape, bool requires_grad)
      : n_(std::make_shared<detail::Node>()) {
    if (static_cast<int>(values.size()) != numel(shape))
      fail("value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    n_->shape = std::move(shape);
    n_->val = std::move(values);
    n_->requires_grad = requires_grad;
  }

  std::shared_ptr<detail::Node> n_;
};

}  // namespace stego::nn
