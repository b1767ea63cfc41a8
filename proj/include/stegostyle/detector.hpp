// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <vector>

#include "stegostyle/layers.hpp"

namespace stego {

struct DetectorConfig {
  int epochs = 5;
  double lr = 1e-3;
  uint64_t seed = 7;
  int min_pairs_per_class = 200;  // desk-scale floor for scenario runs
};

/// Reduced steganalysis CNN: a stride-1 conv stem with no pooling, four
/// conv + average-pool blocks and a pooled linear head producing one logit
/// (positive = stego). Trained from scratch per scenario.
class Detector {
 public:
  ConvBlock stem;
  std::vector<ConvBlock> blocks;
  nn::Parameter head_w;
  nn::Parameter head_b;

  static Detector init(uint64_t seed) {
    Rng rng(mix64(seed ^ 0xdec70000u));
    Detector d;
    d.stem = ConvBlock::make("det.stem", rng, 3, 8, 1, false, Act::Relu);
    const int widths[5] = {8, 16, 32, 32, 32};
    for (int i = 0; i < 4; ++i)
      d.blocks.push_back(ConvBlock::make("det.block" + std::to_string(i + 1), rng, widths[i],
                                         widths[i + 1], 1, false, Act::Relu));
    d.head_w = nn::Parameter("det.head.w", nn::init_dense(rng, 1, widths[4]));
    d.head_b = nn::Parameter("det.head.b", nn::Tensor::zeros({1}, true));
    return d;
  }

  nn::Tensor logit(const nn::Tensor& img) const {
    nn::Tensor x = stem.forward(img);
    for (const ConvBlock& b : blocks) x = nn::avg_pool_2x2(b.forward(x));
    return nn::add(nn::matvec(head_w.value, nn::global_avg_pool(x)), head_b.value);
  }

  bool predict_stego(const nn::Tensor& img) const {
    nn::NoGrad guard;
    return logit(img).values()[0] > 0.0;
  }

  void collect(std::vector<nn::Parameter*>& out) {
    stem.collect(out);
    for (ConvBlock& b : blocks) b.collect(out);
    out.push_back(&head_w);
    out.push_back(&head_b);
  }
};

/// Trains a fresh detector on balanced cover/stego sets with the
/// binary-cross-entropy objective in logit space.
inline Detector train_detector(const std::vector<nn::Tensor>& covers,
                               const std::vector<nn::Tensor>& stegos, const DetectorConfig& cfg) {
  require(!covers.empty() && !stegos.empty(), "detector: empty training class");
  Detector det = Detector::init(cfg.seed);
  std::vector<nn::Parameter*> params;
  det.collect(params);
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam opt(params, ac);
  Rng order(mix64(cfg.seed ^ 0x0123456789abcdefull));

  const size_t n = std::min(covers.size(), stegos.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = 0; i < n; ++i) {
      // one balanced pair per step, random pick with replacement
      const nn::Tensor& cov = covers[static_cast<size_t>(order.below(covers.size()))];
      const nn::Tensor& stg = stegos[static_cast<size_t>(order.below(stegos.size()))];
      opt.zero_grad();
      // -log(1 - sigmoid(l_cover)) - log(sigmoid(l_stego)), halved
      nn::Tensor loss = nn::mul_scalar(
          nn::add(nn::softplus(det.logit(cov)), nn::softplus(nn::mul_scalar(det.logit(stg), -1.0))),
          0.5);
      if (!std::isfinite(loss.item())) continue;
      loss.backward();
      opt.step();
    }
  }
  return det;
}

/// Balanced accuracy: mean of the per-class hit rates.
inline double detector_balanced_accuracy(const Detector& det, const std::vector<nn::Tensor>& covers,
                                         const std::vector<nn::Tensor>& stegos) {
  require(!covers.empty() && !stegos.empty(), "detector: empty evaluation class");
  int tn = 0, tp = 0;
  for (const auto& c : covers)
    if (!det.predict_stego(c)) ++tn;
  for (const auto& s : stegos)
    if (det.predict_stego(s)) ++tp;
  const double tnr = static_cast<double>(tn) / static_cast<double>(covers.size());
  const double tpr = static_cast<double>(tp) / static_cast<double>(stegos.size());
  return 0.5 * (tnr + tpr);
}

}  // namespace stego
