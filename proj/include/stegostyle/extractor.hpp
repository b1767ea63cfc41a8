// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <vector>

#include "stegostyle/codec.hpp"
#include "stegostyle/layers.hpp"
#include "stegostyle/srm.hpp"

namespace stego {

/// Squeeze-excitation channel gate: s = sigmoid(W2 relu(W1 gap(x))),
/// x~ = s_c * x. Gates are strictly inside (0,1) for finite weights; zero
/// weights give the 0.5 ablation baseline.
struct ChannelAttention {
  nn::Parameter w1;  // (c/r) x c
  nn::Parameter w2;  // c x (c/r)
  int channels = 0;
  int reduction = 0;

  static ChannelAttention init(const std::string& name, Rng& rng, int channels, int reduction,
                               bool zero_init = false) {
    if (reduction <= 0 || channels % reduction != 0)
      fail("channel attention: reduction " + std::to_string(reduction) +
           " must divide channel count " + std::to_string(channels));
    ChannelAttention a;
    a.channels = channels;
    a.reduction = reduction;
    const int hidden = channels / reduction;
    if (zero_init) {
      a.w1 = nn::Parameter(name + ".w1", nn::Tensor::zeros({hidden, channels}, true));
      a.w2 = nn::Parameter(name + ".w2", nn::Tensor::zeros({channels, hidden}, true));
    } else {
      a.w1 = nn::Parameter(name + ".w1", nn::init_dense(rng, hidden, channels));
      a.w2 = nn::Parameter(name + ".w2", nn::init_dense(rng, channels, hidden));
    }
    return a;
  }

  nn::Tensor gates(const nn::Tensor& x) const {
    if (x.shape()[2] != channels)
      fail("channel attention: map has " + std::to_string(x.shape()[2]) + " channels, gate expects " +
           std::to_string(channels));
    return nn::sigmoid(nn::matvec(w2.value, nn::relu(nn::matvec(w1.value, nn::global_avg_pool(x)))));
  }

  nn::Tensor forward(const nn::Tensor& x) const { return nn::scale_channels(x, gates(x)); }

  void collect(std::vector<nn::Parameter*>& out) {
    out.push_back(&w1);
    out.push_back(&w2);
  }
};

/// The information recovery network: a high-pass filter bank first layer,
/// a stride-2 conv trunk with channel attention, and a projection head onto
/// the secret grid.
class Extractor {
 public:
  FilterBank bank;
  std::vector<ConvBlock> trunk;  // four stride-2 blocks
  ChannelAttention att1;         // after trunk[1]
  ChannelAttention att2;         // after trunk[2]
  ConvBlock head;
  bool use_attention = true;

  static Extractor init(const std::string& prefix, Rng& rng, int msg_channels, int reduction,
                        bool srm_init, bool use_attention) {
    Extractor x;
    x.use_attention = use_attention;
    Rng bank_rng = rng.fork(17);
    x.bank = srm_init ? FilterBank::srm_init(prefix + ".bank.kernels")
                      : FilterBank::random_init(prefix + ".bank.kernels", bank_rng);
    // norm- and activation-free trunk: message marks are small additive
    // patterns, so the read-out stays a matched-filter bank that per-image
    // normalization or dead zones would only distort; the attention gates
    // supply the data-dependent reweighting
    const int widths[5] = {kSrmBankSize, 32, 64, 128, 128};
    for (int i = 0; i < 4; ++i)
      x.trunk.push_back(ConvBlock::make(prefix + ".conv" + std::to_string(i + 1), rng, widths[i],
                                        widths[i + 1], 2, false, Act::None));
    x.att1 = ChannelAttention::init(prefix + ".att1", rng, widths[2], reduction, !use_attention);
    x.att2 = ChannelAttention::init(prefix + ".att2", rng, widths[3], reduction, !use_attention);
    x.head = ConvBlock::make(prefix + ".head", rng, widths[4], msg_channels, 1, false, Act::None);
    return x;
  }

  /// Stego image (H×W×3 in [-1,1]) → raw secret grid (H/16 × W/16 × Cm).
  nn::Tensor raw_grid(const nn::Tensor& stego) const {
    const int H = stego.shape()[0], W = stego.shape()[1];
    if (H % 16 != 0 || W % 16 != 0)
      fail("extractor: stego dims must be divisible by 16, got " + nn::shape_str(stego.shape()));
    nn::Tensor x = bank.extract_texture(stego);
    x = trunk[0].forward(x);
    x = trunk[1].forward(x);
    x = att1.forward(x);
    x = trunk[2].forward(x);
    x = att2.forward(x);
    x = trunk[3].forward(x);
    return head.forward(x);
  }

  BitMessage extract(const nn::Tensor& stego, uint64_t key, int length) const {
    return decide_bits(raw_grid(stego).detach(), key, length);
  }

  /// Every parameter, in serialization order.
  void collect(std::vector<nn::Parameter*>& out) {
    out.push_back(&bank.kernels);
    for (ConvBlock& b : trunk) b.collect(out);
    att1.collect(out);
    att2.collect(out);
    head.collect(out);
  }

  /// Attention weights join the trainable set only when attention is on;
  /// zeroed frozen weights then pin every gate at 0.5.
  void collect_trainable(std::vector<nn::Parameter*>& out) {
    if (!bank.frozen) out.push_back(&bank.kernels);
    for (ConvBlock& b : trunk) b.collect(out);
    if (use_attention) {
      att1.collect(out);
      att2.collect(out);
    }
    head.collect(out);
  }
};

/// Targets for the secret loss: the message as a ±1 vector.
inline nn::Tensor bit_targets(const BitMessage& msg) {
  std::vector<double> t(static_cast<size_t>(msg.length()));
  for (int i = 0; i < msg.length(); ++i) t[static_cast<size_t>(i)] = msg.bits[static_cast<size_t>(i)] ? 1.0 : -1.0;
  return nn::Tensor::from(std::move(t), {msg.length()});
}

/// Hinged squared error over the placed cells:
/// mean_i max(0, (m_i - m̂_i)^2 - delta_tol). Residuals below sqrt(delta_tol)
/// cost nothing; the subgradient at the hinge is 0.
inline nn::Tensor secret_loss(const nn::Tensor& raw, const nn::Tensor& targets,
                              const std::vector<int>& placement, double delta_tol) {
  require(delta_tol >= 0.0, "secret loss: delta_tol must be non-negative");
  require(static_cast<int>(placement.size()) == targets.size(),
          "secret loss: placement and target lengths differ");
  nn::Tensor got = nn::gather(raw, placement);
  nn::Tensor d = nn::sub(got, targets);
  return nn::mean(nn::relu(nn::add_scalar(nn::mul(d, d), -delta_tol)));
}

}  // namespace stego
