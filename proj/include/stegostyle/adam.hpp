// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stegostyle/tensor.hpp"

namespace stego::nn {

/// A learnable tensor plus its Adam moment estimates. Values and moments are
/// kept float32-representable (see snap_f32) so checkpoints restore the
/// exact in-memory state.
struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  uint64_t steps = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor t) : name(std::move(n)), value(std::move(t)) {
    m.assign(static_cast<size_t>(value.size()), 0.0);
    v.assign(static_cast<size_t>(value.size()), 0.0);
    snap();
  }

  // copying would alias the underlying tensor node
  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;
  Parameter(Parameter&&) = default;
  Parameter& operator=(Parameter&&) = default;

  void snap() {
    for (double& x : value.mutable_values()) x = snap_f32(x);
  }

  void zero_grad() { value.zero_grad(); }
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction over a fixed parameter set.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::vector<Parameter*> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {}

  const std::vector<Parameter*>& params() const { return params_; }
  AdamConfig& config() { return cfg_; }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

  /// Returns false (and applies nothing) if any gradient is non-finite.
  bool step() {
    for (Parameter* p : params_)
      for (double g : p->value.grad())
        if (!std::isfinite(g)) return false;
    for (Parameter* p : params_) {
      p->steps += 1;
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(p->steps));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(p->steps));
      auto& w = p->value.mutable_values();
      const auto& g = p->value.grad();
      for (size_t i = 0; i < w.size(); ++i) {
        p->m[i] = cfg_.beta1 * p->m[i] + (1.0 - cfg_.beta1) * g[i];
        p->v[i] = cfg_.beta2 * p->v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = p->m[i] / bc1;
        const double vhat = p->v[i] / bc2;
        w[i] = snap_f32(w[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        p->m[i] = snap_f32(p->m[i]);
        p->v[i] = snap_f32(p->v[i]);
      }
    }
    return true;
  }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
};

// --- parameter initialization -----------------------------------------------

/// He-style normal init for a k×k×Cin×Cout kernel. `gain` scales the
/// standard deviation (e.g. to compensate variance lost to pooling).
inline Tensor init_conv_kernel(Rng& rng, int k, int cin, int cout, double gain = 1.0) {
  const double std = gain * std::sqrt(2.0 / (static_cast<double>(k) * k * cin));
  std::vector<double> w(static_cast<size_t>(k) * k * cin * cout);
  for (double& x : w) x = snap_f32(rng.normal() * std);
  return Tensor::from(std::move(w), {k, k, cin, cout}, true);
}

inline Tensor init_dense(Rng& rng, int rows, int cols) {
  const double std = std::sqrt(2.0 / static_cast<double>(cols));
  std::vector<double> w(static_cast<size_t>(rows) * cols);
  for (double& x : w) x = snap_f32(rng.normal() * std);
  return Tensor::from(std::move(w), {rows, cols}, true);
}

}  // namespace stego::nn
