// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "stegostyle/common.hpp"

namespace stego {

/// Everything a training run needs, persisted into checkpoints and echoed at
/// startup. Plain-text key=value files set fields by name; CLI flags
/// override.
struct TrainConfig {
  int crop_size = 64;
  int iterations = 5000;
  double lr = 2e-4;
  int batch = 1;
  double lambda_style = 1.0;   // weight of the adversarial style term
  double mu_message = 1.0;     // weight of the secret loss in the generator objective
  double delta_tol = 0.01;     // hinge slack of the secret loss
  double leaky_slope = 0.2;
  int attention_reduction = 8;
  int msg_len = 64;
  int msg_channels = 128;      // channels of the secret grid (capacity = (crop/16)^2 * this)
  uint64_t seed = 1;
  uint64_t msg_key = 42;       // stego key: seeds the bit-to-cell placement
  std::string content_dir;
  std::string style_dir;
  std::string out_dir = "runs/default";
  int save_every = 1000;
  bool overfit_message = false;  // pin a single message instead of fresh ones
  bool use_attention = true;     // ablation: gates fixed at 0.5 when off
  bool srm_filters = true;       // ablation: random filter init when off

  void validate() const {
    require(crop_size > 0 && crop_size % 16 == 0, "config: crop_size must be a positive multiple of 16");
    require(iterations > 0, "config: iterations must be positive");
    require(lr >= 0.0, "config: lr must be non-negative");
    require(batch > 0, "config: batch must be positive");
    require(lambda_style > 0.0, "config: lambda must be positive");
    require(mu_message >= 0.0, "config: mu must be non-negative");
    require(delta_tol >= 0.0, "config: delta_tol must be non-negative");
    require(leaky_slope > 0.0 && leaky_slope < 1.0, "config: leaky_slope must be in (0,1)");
    require(attention_reduction > 0, "config: attention_reduction must be positive");
    require(msg_len > 0, "config: msg_len must be positive");
    require(msg_channels > 0, "config: msg_channels must be positive");
    require(save_every > 0, "config: save_every must be positive");
    const int cells = (crop_size / 16) * (crop_size / 16) * msg_channels;
    require(msg_len <= cells, "config: msg_len " + std::to_string(msg_len) +
                                  " exceeds secret grid capacity " + std::to_string(cells));
  }

  void set(const std::string& key, const std::string& value) {
    auto as_bool = [&](const std::string& v) {
      if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
      if (v == "0" || v == "false" || v == "no" || v == "off") return false;
      fail("config: boolean key `" + key + "` got `" + v + "`");
    };
    try {
      if (key == "crop_size") crop_size = std::stoi(value);
      else if (key == "iterations") iterations = std::stoi(value);
      else if (key == "lr") lr = std::stod(value);
      else if (key == "batch") batch = std::stoi(value);
      else if (key == "lambda") lambda_style = std::stod(value);
      else if (key == "mu") mu_message = std::stod(value);
      else if (key == "delta_tol") delta_tol = std::stod(value);
      else if (key == "leaky_slope") leaky_slope = std::stod(value);
      else if (key == "attention_r") attention_reduction = std::stoi(value);
      else if (key == "msg_len") msg_len = std::stoi(value);
      else if (key == "msg_channels") msg_channels = std::stoi(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "msg_key") msg_key = std::stoull(value);
      else if (key == "content_dir") content_dir = value;
      else if (key == "style_dir") style_dir = value;
      else if (key == "out_dir") out_dir = value;
      else if (key == "save_every") save_every = std::stoi(value);
      else if (key == "overfit_message") overfit_message = as_bool(value);
      else if (key == "use_attention") use_attention = as_bool(value);
      else if (key == "srm_filters") srm_filters = as_bool(value);
      else fail("config: unknown key `" + key + "`");
    } catch (const std::invalid_argument&) {
      fail("config: cannot parse value `" + value + "` for key `" + key + "`");
    } catch (const std::out_of_range&) {
      fail("config: value `" + value + "` out of range for key `" + key + "`");
    }
  }

  /// key=value lines; '#' starts a comment.
  static TrainConfig from_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos)
          fail("config: expected key=value, got: " + line);
        continue;
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static TrainConfig from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_text(buf.str());
  }

  std::string to_kv_text() const {
    std::ostringstream os;
    os << "crop_size=" << crop_size << "\niterations=" << iterations << "\nlr=" << lr
       << "\nbatch=" << batch << "\nlambda=" << lambda_style << "\nmu=" << mu_message
       << "\ndelta_tol=" << delta_tol << "\nleaky_slope=" << leaky_slope
       << "\nattention_r=" << attention_reduction << "\nmsg_len=" << msg_len
       << "\nmsg_channels=" << msg_channels << "\nseed=" << seed << "\nmsg_key=" << msg_key
       << "\ncontent_dir=" << content_dir << "\nstyle_dir=" << style_dir << "\nout_dir=" << out_dir
       << "\nsave_every=" << save_every << "\noverfit_message=" << (overfit_message ? 1 : 0)
       << "\nuse_attention=" << (use_attention ? 1 : 0) << "\nsrm_filters=" << (srm_filters ? 1 : 0)
       << "\n";
    return os.str();
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"crop_size", crop_size},
                          {"iterations", iterations},
                          {"lr", lr},
                          {"batch", batch},
                          {"lambda", lambda_style},
                          {"mu", mu_message},
                          {"delta_tol", delta_tol},
                          {"leaky_slope", leaky_slope},
                          {"attention_r", attention_reduction},
                          {"msg_len", msg_len},
                          {"msg_channels", msg_channels},
                          {"seed", seed},
                          {"msg_key", msg_key},
                          {"content_dir", content_dir},
                          {"style_dir", style_dir},
                          {"out_dir", out_dir},
                          {"save_every", save_every},
                          {"overfit_message", overfit_message},
                          {"use_attention", use_attention},
                          {"srm_filters", srm_filters}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.crop_size = j.at("crop_size").get<int>();
    c.iterations = j.at("iterations").get<int>();
    c.lr = j.at("lr").get<double>();
    c.batch = j.at("batch").get<int>();
    c.lambda_style = j.at("lambda").get<double>();
    c.mu_message = j.at("mu").get<double>();
    c.delta_tol = j.at("delta_tol").get<double>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.attention_reduction = j.at("attention_r").get<int>();
    c.msg_len = j.at("msg_len").get<int>();
    c.msg_channels = j.at("msg_channels").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.msg_key = j.at("msg_key").get<uint64_t>();
    c.content_dir = j.at("content_dir").get<std::string>();
    c.style_dir = j.at("style_dir").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.save_every = j.at("save_every").get<int>();
    c.overfit_message = j.at("overfit_message").get<bool>();
    c.use_attention = j.at("use_attention").get<bool>();
    c.srm_filters = j.at("srm_filters").get<bool>();
    return c;
  }

  /// Fields that define the network architecture; checkpoints refuse to load
  /// into a state built with different values.
  bool architecture_matches(const TrainConfig& other) const {
    return msg_channels == other.msg_channels && attention_reduction == other.attention_reduction &&
           crop_size == other.crop_size && use_attention == other.use_attention;
  }
};

}  // namespace stego
