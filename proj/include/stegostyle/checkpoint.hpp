// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "stegostyle/model.hpp"

namespace stego {

// Checkpoint container: magic, format version, JSON header (config +
// parameter manifest + step), little-endian float32 blobs for every
// parameter followed by its Adam moments and step counter, and a trailing
// CRC32 of everything before it.

inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'C', 'K'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail_ckpt {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<uint8_t>& out, double x) {
  put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(x)));
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) fail("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
};

}  // namespace detail_ckpt

inline std::vector<uint8_t> serialize_checkpoint(Model& model, uint64_t step) {
  std::vector<nn::Parameter*> params = model.all_params();
  nlohmann::json manifest = nlohmann::json::array();
  for (const nn::Parameter* p : params)
    manifest.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  nlohmann::json header = {
      {"format", "stegostyle-checkpoint"},
      {"step", step},
      {"config", model.cfg.to_json()},
      {"params", manifest},
  };
  const std::string header_str = header.dump();

  std::vector<uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
  detail_ckpt::put_u32(out, kCheckpointVersion);
  detail_ckpt::put_u64(out, header_str.size());
  out.insert(out.end(), header_str.begin(), header_str.end());
  for (const nn::Parameter* p : params) {
    for (double v : p->value.values()) detail_ckpt::put_f32(out, v);
    for (double v : p->m) detail_ckpt::put_f32(out, v);
    for (double v : p->v) detail_ckpt::put_f32(out, v);
    detail_ckpt::put_u64(out, p->steps);
  }
  const uint32_t crc = static_cast<uint32_t>(::crc32(0L, out.data(), static_cast<uInt>(out.size())));
  detail_ckpt::put_u32(out, crc);
  return out;
}

inline void save_checkpoint(Model& model, uint64_t step, const std::string& path) {
  const std::vector<uint8_t> bytes = serialize_checkpoint(model, step);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot write checkpoint: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail("checkpoint write failed: " + path);
}

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  uint64_t step = 0;
};

inline LoadedCheckpoint deserialize_checkpoint(const std::vector<uint8_t>& buf) {
  if (buf.size() < 20) fail("checkpoint: truncated file");
  if (std::memcmp(buf.data(), kCheckpointMagic, 4) != 0) fail("checkpoint: bad magic bytes");

  // integrity first: CRC32 over everything but the trailing word
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<uint32_t>(buf[buf.size() - 4 + i]) << (8 * i);
  const uint32_t actual =
      static_cast<uint32_t>(::crc32(0L, buf.data(), static_cast<uInt>(buf.size() - 4)));
  if (stored != actual) fail("checkpoint: integrity check failed (checksum mismatch)");

  detail_ckpt::Reader r{buf, 4};
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail("checkpoint: unsupported format version " + std::to_string(version));
  const uint64_t header_len = r.u64();
  r.need(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + static_cast<long>(r.pos),
                                   buf.begin() + static_cast<long>(r.pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("checkpoint: malformed header: ") + e.what());
  }
  r.pos += header_len;

  LoadedCheckpoint out;
  out.step = header.at("step").get<uint64_t>();
  TrainConfig cfg = TrainConfig::from_json(header.at("config"));
  cfg.validate();
  out.model = std::make_unique<Model>(Model::build(cfg));

  std::vector<nn::Parameter*> params = out.model->all_params();
  const auto& manifest = header.at("params");
  if (manifest.size() != params.size())
    fail("checkpoint: incompatible architecture (parameter count " +
         std::to_string(manifest.size()) + " vs " + std::to_string(params.size()) + ")");
  for (size_t i = 0; i < params.size(); ++i) {
    nn::Parameter* p = params[i];
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != p->name)
      fail("checkpoint: incompatible architecture (parameter `" +
           entry.at("name").get<std::string>() + "` vs `" + p->name + "`)");
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != p->value.shape())
      fail("checkpoint: incompatible architecture (shape of `" + p->name + "`)");
    auto& vals = p->value.mutable_values();
    for (double& v : vals) v = r.f32();
    for (double& v : p->m) v = r.f32();
    for (double& v : p->v) v = r.f32();
    p->steps = r.u64();
  }
  if (r.pos != buf.size() - 4) fail("checkpoint: trailing bytes after parameter blobs");
  return out;
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open checkpoint: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace stego
