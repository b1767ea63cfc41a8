// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "stegostyle/ops.hpp"

namespace stego {

// Structural similarity with the standard 11-tap Gaussian window
// (sigma 1.5), K1 = 0.01, K2 = 0.03, inputs mapped from [-1,1] to [0,1].
// Windows are valid-only (no padding); the result is the mean over all
// window positions and channels.

inline constexpr int kSsimWindow = 11;

inline const std::array<double, kSsimWindow>& ssim_window_1d() {
  static const std::array<double, kSsimWindow> w = [] {
    std::array<double, kSsimWindow> g{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - (kSsimWindow - 1) / 2.0;
      g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += g[static_cast<size_t>(i)];
    }
    for (double& v : g) v /= sum;
    return g;
  }();
  return w;
}

namespace detail_ssim {

/// Separable valid Gaussian filter of a single-channel H×W plane:
/// horizontal pass then vertical, output (H-10)×(W-10).
inline std::vector<double> gauss_valid(const std::vector<double>& plane, int h, int w) {
  const auto& g = ssim_window_1d();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> hpass(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) acc += g[static_cast<size_t>(t)] * plane[static_cast<size_t>(y) * w + x + t];
      hpass[static_cast<size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) acc += g[static_cast<size_t>(t)] * hpass[static_cast<size_t>(y + t) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace detail_ssim

inline double ssim(const nn::Tensor& a, const nn::Tensor& b) {
  nn::detail::check_same_shape(a, b, "ssim");
  nn::detail::check_rank(a, 3, "ssim");
  const int H = a.shape()[0], W = a.shape()[1], C = a.shape()[2];
  if (H < kSsimWindow || W < kSsimWindow)
    fail("ssim: images must be at least " + std::to_string(kSsimWindow) + " pixels per side");

  constexpr double K1 = 0.01, K2 = 0.03;  // dynamic range 1 after mapping
  constexpr double C1 = K1 * K1, C2 = K2 * K2;

  const int oh = H - kSsimWindow + 1, ow = W - kSsimWindow + 1;
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    std::vector<double> pa(static_cast<size_t>(H) * W), pb(pa.size()), paa(pa.size()),
        pbb(pa.size()), pab(pa.size());
    for (int i = 0; i < H * W; ++i) {
      const double va = (a.values()[static_cast<size_t>(i) * C + c] + 1.0) * 0.5;
      const double vb = (b.values()[static_cast<size_t>(i) * C + c] + 1.0) * 0.5;
      pa[static_cast<size_t>(i)] = va;
      pb[static_cast<size_t>(i)] = vb;
      paa[static_cast<size_t>(i)] = va * va;
      pbb[static_cast<size_t>(i)] = vb * vb;
      pab[static_cast<size_t>(i)] = va * vb;
    }
    const auto mu_a = detail_ssim::gauss_valid(pa, H, W);
    const auto mu_b = detail_ssim::gauss_valid(pb, H, W);
    const auto m_aa = detail_ssim::gauss_valid(paa, H, W);
    const auto m_bb = detail_ssim::gauss_valid(pbb, H, W);
    const auto m_ab = detail_ssim::gauss_valid(pab, H, W);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = m_aa[i] - ma * ma;
      const double vb = m_bb[i] - mb * mb;
      const double cov = m_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) /
             ((ma * ma + mb * mb + C1) * (va + vb + C2));
    }
    total += acc / static_cast<double>(oh * ow);
  }
  return total / C;
}

}  // namespace stego
