// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <vector>

#include "stegostyle/adam.hpp"
#include "stegostyle/ops.hpp"

namespace stego {

enum class Act { None, Relu, LeakyRelu, Tanh };

/// 3x3 convolution with optional instance norm and activation. Layers with
/// a norm drop the conv bias (the shift is the norm's job).
struct ConvBlock {
  nn::Parameter kernel;
  nn::Parameter bias;
  nn::Parameter gamma;
  nn::Parameter beta;
  bool norm = true;
  Act act = Act::Relu;
  double slope = 0.2;
  int stride = 1;

  static ConvBlock make(const std::string& name, Rng& rng, int cin, int cout, int stride,
                        bool norm, Act act, double slope = 0.2) {
    ConvBlock b;
    b.norm = norm;
    b.act = act;
    b.slope = slope;
    b.stride = stride;
    b.kernel = nn::Parameter(name + ".kernel", nn::init_conv_kernel(rng, 3, cin, cout));
    if (norm) {
      b.gamma = nn::Parameter(name + ".gamma", nn::Tensor::full({cout}, 1.0, true));
      b.beta = nn::Parameter(name + ".beta", nn::Tensor::zeros({cout}, true));
    } else {
      b.bias = nn::Parameter(name + ".bias", nn::Tensor::zeros({cout}, true));
    }
    return b;
  }

  nn::Tensor forward(const nn::Tensor& x) const {
    nn::Tensor y = nn::conv2d(x, kernel.value, stride, 1);
    y = norm ? nn::instance_norm(y, gamma.value, beta.value) : nn::bias_add(y, bias.value);
    switch (act) {
      case Act::None: break;
      case Act::Relu: y = nn::relu(y); break;
      case Act::LeakyRelu: y = nn::leaky_relu(y, slope); break;
      case Act::Tanh: y = nn::tanh_op(y); break;
    }
    return y;
  }

  void collect(std::vector<nn::Parameter*>& out) {
    out.push_back(&kernel);
    if (norm) {
      out.push_back(&gamma);
      out.push_back(&beta);
    } else {
      out.push_back(&bias);
    }
  }
};

/// x + f(x) with f = conv-norm-act-conv-norm. Channel count is preserved.
struct ResidualBlock {
  ConvBlock a;
  ConvBlock b;

  static ResidualBlock make(const std::string& name, Rng& rng, int channels) {
    ResidualBlock r;
    r.a = ConvBlock::make(name + ".a", rng, channels, channels, 1, true, Act::Relu);
    r.b = ConvBlock::make(name + ".b", rng, channels, channels, 1, true, Act::None);
    return r;
  }

  nn::Tensor forward(const nn::Tensor& x) const {
    if (x.shape()[2] != kernel_channels())
      fail("residual block: trunk expects " + std::to_string(kernel_channels()) +
           " channels, skip carries " + std::to_string(x.shape()[2]));
    return nn::add(b.forward(a.forward(x)), x);
  }

  int kernel_channels() const { return a.kernel.value.shape()[2]; }

  void collect(std::vector<nn::Parameter*>& out) {
    a.collect(out);
    b.collect(out);
  }
};

/// Nearest-neighbor 2x resize followed by a stride-1 conv block. Doubles
/// the spatial dims without the checkerboard artifacts of strided
/// transposed convs. Norm-free so small additive signals keep a stable
/// scale through the upsampling chain.
struct UpsampleBlock {
  ConvBlock conv;

  static UpsampleBlock make(const std::string& name, Rng& rng, int cin, int cout) {
    UpsampleBlock u;
    u.conv = ConvBlock::make(name + ".conv", rng, cin, cout, 1, false, Act::LeakyRelu);
    return u;
  }

  nn::Tensor forward(const nn::Tensor& x) const { return conv.forward(nn::resize_nearest_2x(x)); }

  void collect(std::vector<nn::Parameter*>& out) { conv.collect(out); }
};

}  // namespace stego
