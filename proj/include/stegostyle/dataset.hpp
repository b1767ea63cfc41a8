// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "stegostyle/png_io.hpp"

namespace stego {

// ---------------------------------------------------------------------------
// procedural toy datasets
//
// The desk-scale training sets are synthesized: textured gray-ish content
// images and strongly colored "style" samples with palette + stroke
// statistics a small discriminator can latch onto.

namespace detail_data {

inline uint8_t clamp_byte(double v) {
  if (v < 0.0) return 0;
  if (v > 255.0) return 255;
  return static_cast<uint8_t>(std::lround(v));
}

/// Smooth value noise: a coarse random lattice, bilinearly interpolated.
inline std::vector<double> value_noise(Rng& rng, int size, int cells) {
  std::vector<double> lattice(static_cast<size_t>(cells + 1) * (cells + 1));
  for (double& v : lattice) v = rng.uniform();
  std::vector<double> out(static_cast<size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double fy = static_cast<double>(y) / size * cells;
      const double fx = static_cast<double>(x) / size * cells;
      const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
      const double ty = fy - iy, tx = fx - ix;
      auto at = [&](int yy, int xx) { return lattice[static_cast<size_t>(yy) * (cells + 1) + xx]; };
      const double v = (1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
                       ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
      out[static_cast<size_t>(y) * size + x] = v;
    }
  return out;
}

}  // namespace detail_data

/// Textured content image; `variant` cycles through eight distinct families.
inline ImageU8 make_content_texture(Rng& rng, int size, int variant) {
  ImageU8 img = ImageU8::blank(size, size);
  const int kind = ((variant % 8) + 8) % 8;
  const double phase = rng.range(0.0, 6.28318);
  const double freq = rng.range(0.18, 0.55);
  const double angle = rng.range(0.0, 3.14159);
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::vector<double> noise = detail_data::value_noise(rng, size, 6);
  const int period = 4 + static_cast<int>(rng.below(9));
  const double base = rng.range(70.0, 160.0);
  const uint64_t salt = rng.bits();

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = 0.0;
      switch (kind) {
        case 0:  // checkerboard
          v = (((x / period) + (y / period)) % 2) ? 190.0 : 60.0;
          break;
        case 1:  // oriented stripes
          v = 125.0 + 100.0 * std::sin(freq * (ca * x + sa * y) + phase);
          break;
        case 2: {  // concentric rings
          const double r = std::hypot(x - size / 2.0, y - size / 2.0);
          v = 125.0 + 100.0 * std::sin(freq * r + phase);
          break;
        }
        case 3:  // smooth blobs
          v = 40.0 + 180.0 * noise[static_cast<size_t>(y) * size + x];
          break;
        case 4:  // plaid
          v = 125.0 + 55.0 * std::sin(freq * x + phase) + 55.0 * std::sin(freq * 1.37 * y - phase);
          break;
        case 5: {  // blocky mosaic
          const uint64_t cell =
              mix64(salt ^ (static_cast<uint64_t>(x / period) << 20) ^ static_cast<uint64_t>(y / period));
          v = base + (cell & 1 ? 85.0 : -45.0);
          break;
        }
        case 6:  // diagonal herringbone
          v = ((x + y) / period % 2 == 0 ? 80.0 : 170.0) + 25.0 * std::sin(freq * 3 * x);
          break;
        default:  // gradient plus speckle
          v = 60.0 + 140.0 * (static_cast<double>(x) / size) +
              50.0 * (noise[static_cast<size_t>(y) * size + x] - 0.5);
          break;
      }
      // mild per-image tone jitter, shared across channels (textures stay gray)
      const double toned = v * 0.85 + base * 0.15;
      uint8_t* p = img.px(x, y);
      p[0] = detail_data::clamp_byte(toned);
      p[1] = detail_data::clamp_byte(toned * 0.97 + 4.0);
      p[2] = detail_data::clamp_byte(toned * 0.94 + 8.0);
    }
  return img;
}

/// Strongly colored style sample; four palette/stroke families.
inline ImageU8 make_style_sample(Rng& rng, int size, int variant) {
  ImageU8 img = ImageU8::blank(size, size);
  const int kind = ((variant % 4) + 4) % 4;
  std::vector<double> coarse = detail_data::value_noise(rng, size, 4);
  std::vector<double> fine = detail_data::value_noise(rng, size, 16);
  const double phase = rng.range(0.0, 6.28318);

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double c = coarse[static_cast<size_t>(y) * size + x];
      const double f = fine[static_cast<size_t>(y) * size + x];
      double r = 0, g = 0, b = 0;
      switch (kind) {
        case 0:  // warm impasto: ochre fields, dark strokes
          r = 180 + 60 * c - 70 * (f > 0.75);
          g = 120 + 50 * c - 60 * (f > 0.75);
          b = 60 + 30 * c;
          break;
        case 1: {  // cool wavy bands
          const double band = std::sin(0.25 * y + 8.0 * c + phase);
          r = 50 + 40 * band + 20 * f;
          g = 90 + 60 * band + 20 * f;
          b = 150 + 70 * band;
          break;
        }
        case 2:  // pointillist dots on parchment
          if (f > 0.8) {
            r = 200 * c;
            g = 60 + 120 * (1 - c);
            b = 90 + 130 * c;
          } else {
            r = 225;
            g = 210;
            b = 180;
          }
          break;
        default:  // dark angular patches with bright seams
          if (std::abs(c - 0.5) < 0.04) {
            r = 230;
            g = 190;
            b = 90;
          } else {
            r = 40 + 90 * c;
            g = 30 + 60 * c;
            b = 60 + 120 * (1 - c);
          }
          break;
      }
      uint8_t* p = img.px(x, y);
      p[0] = detail_data::clamp_byte(r);
      p[1] = detail_data::clamp_byte(g);
      p[2] = detail_data::clamp_byte(b);
    }
  return img;
}

/// Writes `n_content` textures and `n_style` style samples as PNGs under
/// dir/content and dir/style.
inline void write_toy_dataset(const std::string& dir, int n_content, int n_style, int size,
                              uint64_t seed) {
  namespace fs = std::filesystem;
  require(n_content > 0 && n_style > 0, "dataset: counts must be positive");
  require(size >= 16, "dataset: image size too small");
  fs::create_directories(fs::path(dir) / "content");
  fs::create_directories(fs::path(dir) / "style");
  Rng root(seed);
  char name[64];
  for (int i = 0; i < n_content; ++i) {
    Rng r = root.fork(1000 + static_cast<uint64_t>(i));
    std::snprintf(name, sizeof(name), "content_%03d.png", i);
    write_png((fs::path(dir) / "content" / name).string(), make_content_texture(r, size, i));
  }
  for (int i = 0; i < n_style; ++i) {
    Rng r = root.fork(2000 + static_cast<uint64_t>(i));
    std::snprintf(name, sizeof(name), "style_%03d.png", i);
    write_png((fs::path(dir) / "style" / name).string(), make_style_sample(r, size, i));
  }
}

// ---------------------------------------------------------------------------
// loading and crop sampling

inline std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) fail("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

/// Pool of decoded images serving random fixed-size crops.
class CropSampler {
 public:
  static CropSampler load(const std::string& dir, int crop_size) {
    CropSampler s;
    s.crop_ = crop_size;
    for (const std::string& path : list_images(dir)) {
      ImageU8 img;
      try {
        img = read_png(path);
      } catch (const Error& e) {
        std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
        continue;
      }
      // undersized sources are a configuration error, not a decode hiccup
      if (img.w < crop_size || img.h < crop_size)
        fail("image " + path + " is " + std::to_string(img.w) + "x" + std::to_string(img.h) +
             ", smaller than the crop size " + std::to_string(crop_size));
      s.images_.push_back(image_to_tensor(img));
      s.paths_.push_back(path);
    }
    if (s.images_.empty()) fail("no usable images in " + dir);
    return s;
  }

  int count() const { return static_cast<int>(images_.size()); }
  int crop_size() const { return crop_; }
  const std::vector<std::string>& paths() const { return paths_; }

  /// Random image, random position; exactly crop_size × crop_size × 3.
  nn::Tensor sample(Rng& rng) const {
    const nn::Tensor& src = images_[static_cast<size_t>(rng.below(images_.size()))];
    const int H = src.shape()[0], W = src.shape()[1];
    const int oy = static_cast<int>(rng.below(static_cast<uint64_t>(H - crop_ + 1)));
    const int ox = static_cast<int>(rng.below(static_cast<uint64_t>(W - crop_ + 1)));
    return crop(src, oy, ox);
  }

  nn::Tensor crop(const nn::Tensor& src, int oy, int ox) const {
    const int W = src.shape()[1];
    std::vector<double> out(static_cast<size_t>(crop_) * crop_ * 3);
    const auto& v = src.values();
    for (int y = 0; y < crop_; ++y)
      for (int x = 0; x < crop_; ++x)
        for (int c = 0; c < 3; ++c)
          out[(static_cast<size_t>(y) * crop_ + x) * 3 + c] =
              v[(static_cast<size_t>(oy + y) * W + (ox + x)) * 3 + c];
    return nn::Tensor::from(std::move(out), {crop_, crop_, 3});
  }

 private:
  int crop_ = 0;
  std::vector<nn::Tensor> images_;
  std::vector<std::string> paths_;
};

}  // namespace stego
