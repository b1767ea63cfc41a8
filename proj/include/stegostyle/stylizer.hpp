// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <vector>

#include "stegostyle/layers.hpp"

namespace stego {

/// Encoder E: one stride-1 conv followed by four stride-2 convs, 16x
/// spatial downsampling in total. Output is the content representation A.
class Encoder {
 public:
  std::vector<ConvBlock> blocks;

  static Encoder init(const std::string& prefix, Rng& rng) {
    const int widths[6] = {3, 32, 32, 64, 128, 256};
    Encoder e;
    for (int i = 0; i < 5; ++i)
      e.blocks.push_back(ConvBlock::make(prefix + ".conv" + std::to_string(i + 1), rng, widths[i],
                                         widths[i + 1], i == 0 ? 1 : 2, true, Act::Relu));
    return e;
  }

  int out_channels() const { return blocks.back().kernel.value.shape()[3]; }

  nn::Tensor forward(const nn::Tensor& img) const {
    nn::detail::check_rank(img, 3, "encoder input");
    const int H = img.shape()[0], W = img.shape()[1];
    if (H % 16 != 0 || W % 16 != 0)
      fail("encoder: spatial dims must be divisible by 16, got " + nn::shape_str(img.shape()) +
           "; resize or crop the image first");
    nn::Tensor x = img;
    for (const ConvBlock& b : blocks) x = b.forward(x);
    return x;
  }

  void collect(std::vector<nn::Parameter*>& out) {
    for (ConvBlock& b : blocks) b.collect(out);
  }
};

/// Decoder G: a channel projection of the [A; M'] concatenation, 9 residual
/// blocks at the bottleneck, 4 upsampling blocks, and a final stride-1 conv
/// with tanh so the stego image lands in [-1,1].
class Decoder {
 public:
  ConvBlock project;
  std::vector<ResidualBlock> residuals;
  std::vector<UpsampleBlock> upsamples;
  ConvBlock final_conv;

  static Decoder init(const std::string& prefix, Rng& rng, int in_channels) {
    Decoder d;
    const int trunk = 128;
    // projection and upsample path are norm-free: the bound message rides
    // these activations and per-image normalization would rescale it by
    // content statistics; Leaky ReLU keeps negative marks alive
    d.project =
        ConvBlock::make(prefix + ".project", rng, in_channels, trunk, 1, false, Act::LeakyRelu);
    for (int i = 0; i < 9; ++i)
      d.residuals.push_back(ResidualBlock::make(prefix + ".res" + std::to_string(i + 1), rng, trunk));
    const int up_widths[5] = {trunk, 64, 32, 16, 8};
    for (int i = 0; i < 4; ++i)
      d.upsamples.push_back(
          UpsampleBlock::make(prefix + ".up" + std::to_string(i + 1), rng, up_widths[i], up_widths[i + 1]));
    d.final_conv = ConvBlock::make(prefix + ".final", rng, up_widths[4], 3, 1, false, Act::Tanh);
    return d;
  }

  int in_channels() const { return project.kernel.value.shape()[2]; }

  nn::Tensor forward(const nn::Tensor& bottleneck) const {
    nn::Tensor x = project.forward(bottleneck);
    for (const ResidualBlock& r : residuals) x = r.forward(x);
    for (const UpsampleBlock& u : upsamples) x = u.forward(x);
    return final_conv.forward(x);
  }

  void collect(std::vector<nn::Parameter*>& out) {
    project.collect(out);
    for (ResidualBlock& r : residuals) r.collect(out);
    for (UpsampleBlock& u : upsamples) u.collect(out);
    final_conv.collect(out);
  }
};

/// Fully convolutional discriminator: a chain of stride-2 convs and a 1-channel
/// projection producing a logit map. Seven stride-2 layers at full scale;
/// four below 128px, where seven halvings would collapse the map.
class Discriminator {
 public:
  std::vector<ConvBlock> blocks;
  ConvBlock head;

  static Discriminator init(const std::string& prefix, Rng& rng, int image_size, double slope) {
    const int n = image_size >= 128 ? 7 : 4;
    static const int widths[8] = {3, 32, 64, 128, 256, 256, 256, 256};
    Discriminator d;
    for (int i = 0; i < n; ++i)
      d.blocks.push_back(ConvBlock::make(prefix + ".conv" + std::to_string(i + 1), rng, widths[i],
                                         widths[i + 1], 2, i > 0, Act::LeakyRelu, slope));
    d.head = ConvBlock::make(prefix + ".head", rng, widths[n], 1, 1, false, Act::None);
    return d;
  }

  /// Returns the raw logit map (no sigmoid).
  nn::Tensor forward(const nn::Tensor& img) const {
    nn::Tensor x = img;
    for (const ConvBlock& b : blocks) x = b.forward(x);
    return head.forward(x);
  }

  void collect(std::vector<nn::Parameter*>& out) {
    for (ConvBlock& b : blocks) b.collect(out);
    head.collect(out);
  }
};

// ---------------------------------------------------------------------------
// losses
//
// All GAN terms are computed from logits via softplus, so no literal log of
// a probability is ever taken:  -log sigmoid(x) = softplus(-x)  and
// -log(1 - sigmoid(x)) = softplus(x).

/// Discriminator objective: -(E[log D(style)] + E[log(1 - D(stego))]).
inline nn::Tensor discriminator_loss(const nn::Tensor& style_logits, const nn::Tensor& stego_logits) {
  return nn::add(nn::mean(nn::softplus(nn::mul_scalar(style_logits, -1.0))),
                 nn::mean(nn::softplus(stego_logits)));
}

/// Non-saturating generator style term: -E[log D(stego)].
inline nn::Tensor generator_style_loss(const nn::Tensor& stego_logits) {
  return nn::mean(nn::softplus(nn::mul_scalar(stego_logits, -1.0)));
}

/// Mean squared distance between the encoder features of the content image
/// and of its stego.
inline nn::Tensor content_loss(const nn::Tensor& content_features, const nn::Tensor& stego_features) {
  return nn::mse(content_features, stego_features);
}

/// Generator-side objective: lambda * style + content + mu * message.
inline nn::Tensor total_generator_loss(double lambda, const nn::Tensor& style_g,
                                       const nn::Tensor& l_content, double mu,
                                       const nn::Tensor& l_message) {
  require(lambda > 0.0 && mu >= 0.0, "total loss: lambda must be positive, mu non-negative");
  return nn::add(nn::add(nn::mul_scalar(style_g, lambda), l_content),
                 nn::mul_scalar(l_message, mu));
}

}  // namespace stego
