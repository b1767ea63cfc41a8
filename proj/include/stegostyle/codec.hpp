// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "stegostyle/ops.hpp"

namespace stego {

/// The secret payload: a fixed-length bit sequence.
struct BitMessage {
  std::vector<uint8_t> bits;  // each 0 or 1

  int length() const { return static_cast<int>(bits.size()); }

  static BitMessage random(Rng& rng, int length) {
    require(length > 0, "message length must be positive");
    BitMessage m;
    m.bits.resize(static_cast<size_t>(length));
    for (auto& b : m.bits) b = static_cast<uint8_t>(rng.bits() & 1u);
    return m;
  }

  std::string to_bit_string() const {
    std::string s;
    s.reserve(bits.size());
    for (uint8_t b : bits) s.push_back(b ? '1' : '0');
    return s;
  }

  std::string to_hex_string() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (size_t i = 0; i < bits.size(); i += 4) {
      int v = 0;
      for (size_t j = 0; j < 4; ++j) {
        v <<= 1;
        if (i + j < bits.size()) v |= bits[i + j];
      }
      s.push_back(digits[v]);
    }
    return s;
  }

  static BitMessage from_bit_string(const std::string& s) {
    BitMessage m;
    for (char c : s) {
      if (c == '0' || c == '1') m.bits.push_back(static_cast<uint8_t>(c - '0'));
      else if (!std::isspace(static_cast<unsigned char>(c)))
        fail(std::string("bit string: unexpected character '") + c + "'");
    }
    require(!m.bits.empty(), "bit string: no bits found");
    return m;
  }

  static BitMessage from_hex_string(const std::string& s) {
    BitMessage m;
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      int v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
      else fail(std::string("hex string: unexpected character '") + c + "'");
      for (int j = 3; j >= 0; --j) m.bits.push_back(static_cast<uint8_t>((v >> j) & 1));
    }
    require(!m.bits.empty(), "hex string: no digits found");
    return m;
  }

  /// Accepts either a bit string (only 0/1 and whitespace) or a hex string.
  static BitMessage parse_text(const std::string& text) {
    bool bits_only = true;
    bool any = false;
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      any = true;
      if (c != '0' && c != '1') bits_only = false;
    }
    require(any, "message text is empty");
    return bits_only ? from_bit_string(text) : from_hex_string(text);
  }
};

inline double bit_agreement(const BitMessage& a, const BitMessage& b) {
  require(a.length() == b.length(), "bit_agreement: length mismatch");
  int same = 0;
  for (int i = 0; i < a.length(); ++i)
    if (a.bits[static_cast<size_t>(i)] == b.bits[static_cast<size_t>(i)]) ++same;
  return static_cast<double>(same) / a.length();
}

/// Dimensions of the secret-feature grid the message maps into. The grid
/// sits at the encoder bottleneck resolution.
struct SecretGrid {
  int h = 0;
  int w = 0;
  int c = 0;

  int capacity() const { return h * w * c; }

  static SecretGrid for_image(int img_h, int img_w, int msg_channels) {
    require(img_h % 16 == 0 && img_w % 16 == 0,
            "secret grid: image dims must be divisible by 16, got " + std::to_string(img_h) + "x" +
                std::to_string(img_w) + "; resize or crop the image first");
    return SecretGrid{img_h / 16, img_w / 16, msg_channels};
  }
};

/// The bit-to-cell assignment: a key-seeded permutation of all grid cells,
/// truncated to the message length. The key is the shared stego key; sender
/// and receiver must agree on it.
inline std::vector<int> cell_placement(const SecretGrid& grid, uint64_t key, int length) {
  const int cap = grid.capacity();
  if (length <= 0) fail("message length must be positive");
  if (length > cap)
    fail("message of " + std::to_string(length) + " bits exceeds grid capacity: " +
         std::to_string(grid.h) + "x" + std::to_string(grid.w) + "x" + std::to_string(grid.c) +
         " = " + std::to_string(cap) + " cells");
  std::vector<int> perm(static_cast<size_t>(cap));
  for (int i = 0; i < cap; ++i) perm[static_cast<size_t>(i)] = i;
  Rng rng(mix64(key ^ 0x7061636b6d617000ull));
  // Fisher-Yates, spelled out for cross-platform determinism
  for (int i = cap - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  perm.resize(static_cast<size_t>(length));
  return perm;
}

/// Places message bits into the secret grid as +1 (bit 1) / -1 (bit 0);
/// unplaced cells stay 0. Inverse of decide_bits given (key, length).
inline nn::Tensor map_bits(const BitMessage& msg, const SecretGrid& grid, uint64_t key) {
  const std::vector<int> perm = cell_placement(grid, key, msg.length());
  std::vector<double> cells(static_cast<size_t>(grid.capacity()), 0.0);
  for (int i = 0; i < msg.length(); ++i)
    cells[static_cast<size_t>(perm[static_cast<size_t>(i)])] = msg.bits[static_cast<size_t>(i)] ? 1.0 : -1.0;
  return nn::Tensor::from(std::move(cells), {grid.h, grid.w, grid.c});
}

/// Texture-adaptive binding: M' = M ⊙ F. Cells the message does not occupy
/// are zero in M and stay zero in M'.
inline nn::Tensor bind(const nn::Tensor& secret, const nn::Tensor& feature) {
  nn::detail::check_same_shape(secret, feature, "bind");
  return nn::mul(secret, feature);
}

/// Sign rule: positive decodes 1, everything else (including exact zero)
/// decodes 0.
inline BitMessage decide_bits(const nn::Tensor& raw, uint64_t key, int length) {
  nn::detail::check_rank(raw, 3, "decide_bits grid");
  const SecretGrid grid{raw.shape()[0], raw.shape()[1], raw.shape()[2]};
  const std::vector<int> perm = cell_placement(grid, key, length);
  BitMessage msg;
  msg.bits.resize(static_cast<size_t>(length));
  const auto& v = raw.values();
  for (int i = 0; i < length; ++i)
    msg.bits[static_cast<size_t>(i)] = v[static_cast<size_t>(perm[static_cast<size_t>(i)])] > 0.0 ? 1 : 0;
  return msg;
}

}  // namespace stego
