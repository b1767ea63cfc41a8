// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "stegostyle/ops.hpp"

namespace stego {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct ImageU8 {
  int w = 0;
  int h = 0;
  std::vector<uint8_t> rgb;

  static ImageU8 blank(int w, int h) {
    ImageU8 img;
    img.w = w;
    img.h = h;
    img.rgb.assign(static_cast<size_t>(w) * h * 3, 0);
    return img;
  }

  uint8_t* px(int x, int y) { return &rgb[(static_cast<size_t>(y) * w + x) * 3]; }
  const uint8_t* px(int x, int y) const { return &rgb[(static_cast<size_t>(y) * w + x) * 3]; }
};

/// [0,255] bytes ↔ [-1,1] reals. The byte→real→byte round trip is exact.
inline nn::Tensor image_to_tensor(const ImageU8& img) {
  std::vector<double> v(img.rgb.size());
  for (size_t i = 0; i < img.rgb.size(); ++i) v[i] = img.rgb[i] / 127.5 - 1.0;
  return nn::Tensor::from(std::move(v), {img.h, img.w, 3});
}

inline ImageU8 tensor_to_image(const nn::Tensor& t) {
  nn::detail::check_rank(t, 3, "tensor_to_image");
  if (t.shape()[2] != 3) fail("tensor_to_image: need 3 channels, got " + std::to_string(t.shape()[2]));
  ImageU8 img = ImageU8::blank(t.shape()[1], t.shape()[0]);
  const auto& v = t.values();
  for (size_t i = 0; i < v.size(); ++i) {
    double x = (v[i] + 1.0) * 127.5;
    if (x < 0.0) x = 0.0;
    if (x > 255.0) x = 255.0;
    img.rgb[i] = static_cast<uint8_t>(std::lround(x));
  }
  return img;
}

namespace detail_png {

inline void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline uint32_t get_be32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline void write_chunk(std::vector<uint8_t>& out, const char type[5],
                        const std::vector<uint8_t>& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = static_cast<uint32_t>(
      ::crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start)));
  put_be32(out, crc);
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail_png

inline std::vector<uint8_t> encode_png(const ImageU8& img) {
  require(img.w > 0 && img.h > 0, "encode_png: empty image");
  require(img.rgb.size() == static_cast<size_t>(img.w) * img.h * 3, "encode_png: buffer size mismatch");

  // scanlines with filter byte 0 (None)
  const size_t stride = static_cast<size_t>(img.w) * 3;
  std::vector<uint8_t> raw((stride + 1) * img.h);
  for (int y = 0; y < img.h; ++y) {
    raw[(stride + 1) * y] = 0;
    std::memcpy(&raw[(stride + 1) * y + 1], &img.rgb[stride * y], stride);
  }
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail("encode_png: deflate failed");
  compressed.resize(bound);

  std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<uint8_t> ihdr;
  detail_png::put_be32(ihdr, static_cast<uint32_t>(img.w));
  detail_png::put_be32(ihdr, static_cast<uint32_t>(img.h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  detail_png::write_chunk(out, "IHDR", ihdr);
  detail_png::write_chunk(out, "IDAT", compressed);
  detail_png::write_chunk(out, "IEND", {});
  return out;
}

inline ImageU8 decode_png(const std::vector<uint8_t>& file) {
  static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
    fail("decode_png: not a PNG file");

  int w = 0, h = 0, bit_depth = 0, color_type = 0;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  bool saw_end = false;
  while (pos + 12 <= file.size()) {
    const uint32_t len = detail_png::get_be32(&file[pos]);
    if (pos + 12 + len > file.size()) fail("decode_png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
    const uint8_t* data = &file[pos + 8];
    const uint32_t stored_crc = detail_png::get_be32(&file[pos + 8 + len]);
    const uint32_t crc =
        static_cast<uint32_t>(::crc32(0L, &file[pos + 4], static_cast<uInt>(len + 4)));
    if (crc != stored_crc) fail("decode_png: chunk checksum mismatch");
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail("decode_png: bad IHDR");
      w = static_cast<int>(detail_png::get_be32(data));
      h = static_cast<int>(detail_png::get_be32(data + 4));
      bit_depth = data[8];
      color_type = data[9];
      if (data[12] != 0) fail("decode_png: interlaced PNGs not supported");
      if (bit_depth != 8) fail("decode_png: only 8-bit channels supported");
      if (color_type != 0 && color_type != 2 && color_type != 6)
        fail("decode_png: unsupported color type " + std::to_string(color_type));
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
      break;
    }
    pos += 12 + len;
  }
  if (w <= 0 || h <= 0) fail("decode_png: missing IHDR");
  if (!saw_end) fail("decode_png: truncated file (no IEND)");
  if (idat.empty()) fail("decode_png: no image data");

  const int bpp = color_type == 2 ? 3 : (color_type == 6 ? 4 : 1);
  const size_t stride = static_cast<size_t>(w) * bpp;
  std::vector<uint8_t> raw((stride + 1) * h);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int zret = ::uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
  if (zret != Z_OK || raw_len != raw.size()) fail("decode_png: corrupt image data stream");

  // undo scanline filters in place
  std::vector<uint8_t> pixels(stride * h);
  for (int y = 0; y < h; ++y) {
    const uint8_t filter = raw[(stride + 1) * y];
    const uint8_t* src = &raw[(stride + 1) * y + 1];
    uint8_t* dst = &pixels[stride * y];
    const uint8_t* prev = y > 0 ? &pixels[stride * (y - 1)] : nullptr;
    for (size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= static_cast<size_t>(bpp)) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += detail_png::paeth(a, b, c); break;
        default: fail("decode_png: unknown filter type " + std::to_string(filter));
      }
      dst[i] = static_cast<uint8_t>(v & 0xff);
    }
  }

  ImageU8 img = ImageU8::blank(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const uint8_t* p = &pixels[stride * y + static_cast<size_t>(x) * bpp];
      uint8_t* q = img.px(x, y);
      if (bpp == 1) q[0] = q[1] = q[2] = p[0];
      else {
        q[0] = p[0];
        q[1] = p[1];
        q[2] = p[2];
      }
    }
  return img;
}

inline void write_png(const std::string& path, const ImageU8& img) {
  const std::vector<uint8_t> bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail("write failed: " + path);
}

inline ImageU8 read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace stego
