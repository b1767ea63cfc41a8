// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stegostyle/adam.hpp"
#include "stegostyle/ops.hpp"

namespace stego {

inline constexpr int kSrmKernelSize = 5;
inline constexpr int kSrmBankSize = 32;

struct SrmKernel {
  std::string name;
  double scale = 1.0;
  std::array<int, 25> coeffs{};  // row-major 5x5

  double at(int y, int x) const { return coeffs[static_cast<size_t>(y) * 5 + x] / scale; }

  int coeff_sum() const {
    int s = 0;
    for (int c : coeffs) s += c;
    return s;
  }
};

/// The shipped base set: first/second/third-order differences, the 3x3 edge
/// and square predictors, and the 5x5 square predictor. Mirrors
/// data/srm_filters.txt byte for byte.
inline const std::string& builtin_srm_table() {
  static const std::string table = R"(# stegostyle SRM residual filter table.
#
# Format: each filter starts with a line `kernel <name> <scale>` followed by
# five rows of five integer coefficients. The effective coefficient is
# integer / scale. Every grid sums to zero (high-pass). Scales are powers of
# two so the coefficients are exactly representable in float32.
#
# The bank is built from these 8 base kernels and their 90/180/270 degree
# rotations (32 filters total). Each 5x5 grid is applied across the three
# color channels with dyadic luma-style weights 1/4, 1/2, 1/4, so a gray
# image sees the plain grid response.

kernel d1_h 1
0 0 0 0 0
0 0 0 0 0
0 0 -1 1 0
0 0 0 0 0
0 0 0 0 0

kernel d1_diag 1
0 0 0 0 0
0 0 0 0 0
0 0 -1 0 0
0 0 0 1 0
0 0 0 0 0

kernel d2_h 2
0 0 0 0 0
0 0 0 0 0
0 1 -2 1 0
0 0 0 0 0
0 0 0 0 0

kernel d2_diag 2
0 0 0 0 0
0 1 0 0 0
0 0 -2 0 0
0 0 0 1 0
0 0 0 0 0

kernel d3_h 4
0 0 0 0 0
0 0 0 0 0
0 1 -3 3 -1
0 0 0 0 0
0 0 0 0 0

kernel edge3 4
0 0 0 0 0
0 -1 2 -1 0
0 2 -4 2 0
0 0 0 0 0
0 0 0 0 0

kernel square3 4
0 0 0 0 0
0 -1 2 -1 0
0 2 -4 2 0
0 -1 2 -1 0
0 0 0 0 0

kernel square5 16
-1 2 -2 2 -1
2 -6 8 -6 2
-2 8 -12 8 -2
2 -6 8 -6 2
-1 2 -2 2 -1
)";
  return table;
}

inline std::vector<SrmKernel> parse_srm_table(const std::string& text) {
  std::vector<SrmKernel> kernels;
  std::istringstream in(text);
  std::string line;
  int rows_pending = 0;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream ls(line);
    if (rows_pending == 0) {
      std::string tag;
      SrmKernel k;
      if (!(ls >> tag >> k.name >> k.scale) || tag != "kernel")
        fail("srm table: expected `kernel <name> <scale>`, got: " + line);
      if (k.scale <= 0) fail("srm table: scale must be positive in kernel " + k.name);
      kernels.push_back(k);
      rows_pending = 5;
    } else {
      SrmKernel& k = kernels.back();
      const int row = 5 - rows_pending;
      for (int x = 0; x < 5; ++x)
        if (!(ls >> k.coeffs[static_cast<size_t>(row) * 5 + x]))
          fail("srm table: kernel " + k.name + " row " + std::to_string(row) +
               " needs 5 integers, got: " + line);
      --rows_pending;
    }
  }
  if (rows_pending != 0) fail("srm table: truncated kernel " + kernels.back().name);
  for (const SrmKernel& k : kernels)
    if (k.coeff_sum() != 0) fail("srm table: kernel " + k.name + " does not sum to zero");
  return kernels;
}

inline std::vector<SrmKernel> load_srm_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open srm table file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_srm_table(buf.str());
}

/// 90-degree clockwise rotation of a 5x5 grid.
inline SrmKernel rotate_cw(const SrmKernel& k) {
  SrmKernel r = k;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      r.coeffs[static_cast<size_t>(y) * 5 + x] = k.coeffs[static_cast<size_t>(4 - x) * 5 + y];
  return r;
}

/// Base set expanded with its rotations, in base-major order
/// (k0 r0, k0 r90, k0 r180, k0 r270, k1 r0, ...).
inline std::vector<SrmKernel> expand_rotations(const std::vector<SrmKernel>& base) {
  std::vector<SrmKernel> all;
  all.reserve(base.size() * 4);
  static const char* suffix[4] = {"", "_r90", "_r180", "_r270"};
  for (const SrmKernel& k : base) {
    SrmKernel cur = k;
    for (int r = 0; r < 4; ++r) {
      SrmKernel named = cur;
      named.name += suffix[r];
      all.push_back(named);
      cur = rotate_cw(cur);
    }
  }
  return all;
}

/// The learnable 32-kernel high-pass bank. Applied stride-1 with clamped
/// (edge-replicating) padding so a constant image produces a zero response
/// over the whole map, borders included.
class FilterBank {
 public:
  nn::Parameter kernels;  // 5x5x3x32
  bool frozen = false;

  static FilterBank srm_init(const std::string& name, const std::vector<SrmKernel>& base_table) {
    const std::vector<SrmKernel> all = expand_rotations(base_table);
    if (static_cast<int>(all.size()) != kSrmBankSize)
      fail("srm bank: expected " + std::to_string(kSrmBankSize) + " kernels after rotation, got " +
           std::to_string(all.size()));
    // dyadic channel weights: with power-of-two table scales every effective
    // coefficient is exact in float32 and the kernel sums stay exactly zero
    static constexpr double kChannelWeight[3] = {0.25, 0.5, 0.25};
    std::vector<double> w(static_cast<size_t>(5) * 5 * 3 * kSrmBankSize, 0.0);
    for (int j = 0; j < kSrmBankSize; ++j)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
          const double v = all[static_cast<size_t>(j)].at(y, x);
          for (int ci = 0; ci < 3; ++ci)
            w[((static_cast<size_t>(y) * 5 + x) * 3 + ci) * kSrmBankSize + j] =
                snap_f32(v * kChannelWeight[ci]);
        }
    FilterBank bank;
    bank.kernels = nn::Parameter(name, nn::Tensor::from(std::move(w), {5, 5, 3, kSrmBankSize}, true));
    return bank;
  }

  static FilterBank srm_init(const std::string& name) {
    return srm_init(name, parse_srm_table(builtin_srm_table()));
  }

  /// Random init stands in for the SRM coefficients in the
  /// filters-off ablation arm.
  static FilterBank random_init(const std::string& name, Rng& rng) {
    FilterBank bank;
    bank.kernels = nn::Parameter(name, nn::init_conv_kernel(rng, 5, 3, kSrmBankSize));
    return bank;
  }

  /// H×W×3 image in [-1,1] → H×W×32 residual map.
  nn::Tensor extract_texture(const nn::Tensor& img) const {
    nn::detail::check_rank(img, 3, "extract_texture image");
    if (img.shape()[2] != 3)
      fail("extract_texture: image channel axis must be 3, got " + std::to_string(img.shape()[2]));
    return nn::conv2d(img, kernels.value, 1, 2, nn::Pad::Clamp);
  }
};

/// The 4-conv Leaky ReLU head that turns the residual map into the content
/// feature F at the secret-grid resolution (each conv is stride 1; a 2x2
/// average pool in front of each conv supplies the 16x downsampling).
class PreprocessHead {
 public:
  struct Layer {
    nn::Parameter kernel;
    nn::Parameter bias;
  };
  std::vector<Layer> layers;
  double slope = 0.2;

  static PreprocessHead init(const std::string& prefix, Rng& rng, int msg_channels,
                             double leaky_slope) {
    const int widths[5] = {kSrmBankSize, 16, 32, 64, msg_channels};
    PreprocessHead head;
    head.slope = leaky_slope;
    for (int i = 0; i < 4; ++i) {
      Layer l;
      const std::string base = prefix + ".conv" + std::to_string(i + 1);
      // gain 5 per layer compensates the std halved by each 2x2 average pool
      // and the Leaky ReLU attenuation, keeping the content feature at a
      // usable magnitude for the message binding
      l.kernel = nn::Parameter(base + ".kernel",
                               nn::init_conv_kernel(rng, 3, widths[i], widths[i + 1], 5.0));
      l.bias = nn::Parameter(base + ".bias", nn::Tensor::zeros({widths[i + 1]}, true));
      head.layers.push_back(std::move(l));
    }
    return head;
  }

  /// H×W×32 residual map → (H/16)×(W/16)×Cm content feature.
  nn::Tensor forward(const nn::Tensor& residual) const {
    const int H = residual.shape()[0], W = residual.shape()[1];
    if (H % 16 != 0 || W % 16 != 0)
      fail("content feature: spatial dims must be divisible by 16, got " +
           nn::shape_str(residual.shape()) + "; resize or crop the image first");
    nn::Tensor x = residual;
    for (const Layer& l : layers) {
      x = nn::avg_pool_2x2(x);
      x = nn::bias_add(nn::conv2d(x, l.kernel.value, 1, 1), l.bias.value);
      x = nn::leaky_relu(x, slope);
    }
    return x;
  }
};

/// Residual extraction followed by the 4-conv head: produces the content
/// feature F that the message matrix is bound to.
inline nn::Tensor content_feature(const nn::Tensor& img, const FilterBank& bank,
                                  const PreprocessHead& head) {
  return head.forward(bank.extract_texture(img));
}

}  // namespace stego
