// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stegostyle/checkpoint.hpp"
#include "stegostyle/dataset.hpp"
#include "stegostyle/model.hpp"

namespace stego {

struct StepMetrics {
  uint64_t step = 0;
  double loss_d = 0.0;
  double loss_g_style = 0.0;
  double l_c = 0.0;
  double l_m = 0.0;
  double bit_acc = 0.0;
  bool skipped = false;
};

/// Alternating optimization: one discriminator update on the adversarial
/// style loss, then one joint update of encoder, decoder, preprocessing
/// path and extractor on the total generator objective.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg)
      : model_(Model::build(cfg)),
        rng_crop_(Rng(cfg.seed).fork(101)),
        rng_msg_(Rng(cfg.seed).fork(102)) {
    adam_.lr = cfg.lr;
    opt_d_ = nn::Adam(model_.disc_params(), adam_);
    opt_g_ = nn::Adam(model_.gen_params(), adam_);
    if (cfg.overfit_message) pinned_msg_ = BitMessage::random(rng_msg_, cfg.msg_len);
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  Model& model() { return model_; }
  const TrainConfig& cfg() const { return model_.cfg; }
  uint64_t step_count() const { return step_; }
  Rng& crop_rng() { return rng_crop_; }

  BitMessage next_message() {
    return cfg().overfit_message ? pinned_msg_ : BitMessage::random(rng_msg_, cfg().msg_len);
  }

  /// One alternating step on a batch. All inputs must be crop-sized.
  StepMetrics train_step(const std::vector<nn::Tensor>& contents,
                         const std::vector<nn::Tensor>& styles,
                         const std::vector<BitMessage>& msgs) {
    require(!contents.empty() && contents.size() == styles.size() && contents.size() == msgs.size(),
            "train_step: batch lists must be non-empty and equally sized");
    const SecretGrid grid = model_.train_grid();
    const double inv_b = 1.0 / static_cast<double>(contents.size());
    step_ += 1;

    StepMetrics m;
    m.step = step_;

    // forward: stego graphs shared by both phases
    std::vector<nn::Tensor> stegos, content_feats, raw_targets;
    std::vector<std::vector<int>> placements;
    for (size_t i = 0; i < contents.size(); ++i) {
      nn::Tensor f = content_feature(contents[i], model_.prep_bank, model_.head);
      nn::Tensor secret = map_bits(msgs[i], grid, cfg().msg_key);
      nn::Tensor bound = bind(secret, f);
      nn::Tensor a = model_.encoder.forward(contents[i]);
      stegos.push_back(model_.decoder.forward(nn::concat_channels(a, bound)));
      content_feats.push_back(a);
      raw_targets.push_back(bit_targets(msgs[i]));
      placements.push_back(cell_placement(grid, cfg().msg_key, msgs[i].length()));
    }

    // discriminator phase
    bool d_applied = false;
    {
      opt_d_.zero_grad();
      nn::Tensor loss_d;
      for (size_t i = 0; i < contents.size(); ++i) {
        nn::Tensor item = nn::mul_scalar(
            discriminator_loss(model_.disc.forward(styles[i]), model_.disc.forward(stegos[i].detach())),
            inv_b);
        loss_d = i == 0 ? item : nn::add(loss_d, item);
      }
      m.loss_d = loss_d.item();
      if (std::isfinite(m.loss_d)) {
        loss_d.backward();
        d_applied = opt_d_.step();
      }
    }

    // joint generator/extractor phase
    bool g_applied = false;
    {
      opt_g_.zero_grad();
      nn::Tensor style_g, l_c, l_m;
      double acc_sum = 0.0;
      for (size_t i = 0; i < contents.size(); ++i) {
        nn::Tensor logits = model_.disc.forward(stegos[i]);
        nn::Tensor sg = nn::mul_scalar(generator_style_loss(logits), inv_b);
        nn::Tensor lc = nn::mul_scalar(
            content_loss(content_feats[i], model_.encoder.forward(stegos[i])), inv_b);
        nn::Tensor raw = model_.extractor.raw_grid(stegos[i]);
        nn::Tensor lm = nn::mul_scalar(
            secret_loss(raw, raw_targets[i], placements[i], cfg().delta_tol), inv_b);
        style_g = i == 0 ? sg : nn::add(style_g, sg);
        l_c = i == 0 ? lc : nn::add(l_c, lc);
        l_m = i == 0 ? lm : nn::add(l_m, lm);
        acc_sum += bit_agreement(decide_bits(raw.detach(), cfg().msg_key, msgs[i].length()), msgs[i]);
      }
      m.loss_g_style = style_g.item();
      m.l_c = l_c.item();
      m.l_m = l_m.item();
      m.bit_acc = acc_sum * inv_b;
      nn::Tensor total =
          total_generator_loss(cfg().lambda_style, style_g, l_c, cfg().mu_message, l_m);
      if (std::isfinite(total.item())) {
        total.backward();
        g_applied = opt_g_.step();
      }
    }

    m.skipped = !(d_applied && g_applied);
    if (m.skipped) {
      ++consecutive_skips_;
      std::cerr << "warning: step " << step_ << " skipped (non-finite loss or gradient)\n";
      if (consecutive_skips_ >= 10)
        fail("training aborted: 10 consecutive non-finite steps at step " + std::to_string(step_) +
             "; lower the learning rate or loss weights");
      // keep the metric row finite
      m.loss_d = last_finite_.loss_d;
      m.loss_g_style = last_finite_.loss_g_style;
      m.l_c = last_finite_.l_c;
      m.l_m = last_finite_.l_m;
    } else {
      consecutive_skips_ = 0;
      last_finite_ = m;
    }
    return m;
  }

 private:
  Model model_;
  nn::AdamConfig adam_;
  nn::Adam opt_d_;
  nn::Adam opt_g_;
  Rng rng_crop_;
  Rng rng_msg_;
  BitMessage pinned_msg_;
  uint64_t step_ = 0;
  int consecutive_skips_ = 0;
  StepMetrics last_finite_;
};

struct RunResult {
  std::vector<std::string> checkpoint_paths;
  std::string final_checkpoint;
  std::string metrics_csv;
  std::vector<StepMetrics> metrics;
};

inline std::string metrics_csv_header() { return "step,loss_d,loss_g_style,l_c,l_m,bit_acc"; }

inline std::string metrics_csv_row(const StepMetrics& m) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%llu,%.10g,%.10g,%.10g,%.10g,%.10g",
                static_cast<unsigned long long>(m.step), m.loss_d, m.loss_g_style, m.l_c, m.l_m,
                m.bit_acc);
  return buf;
}

/// Full training run: data pipeline, alternating updates, metric log and
/// periodic checkpoints under cfg.out_dir.
inline RunResult run_training(const TrainConfig& cfg, bool quiet = true) {
  namespace fs = std::filesystem;
  cfg.validate();
  CropSampler content = CropSampler::load(cfg.content_dir, cfg.crop_size);
  CropSampler style = CropSampler::load(cfg.style_dir, cfg.crop_size);

  fs::create_directories(cfg.out_dir);
  RunResult result;
  result.metrics_csv = (fs::path(cfg.out_dir) / "metrics.csv").string();
  std::ofstream csv(result.metrics_csv, std::ios::trunc);
  if (!csv) fail("cannot write metric log: " + result.metrics_csv);
  csv << metrics_csv_header() << "\n";

  Trainer trainer(cfg);
  auto save = [&](uint64_t step) {
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_%06llu.ckpt", static_cast<unsigned long long>(step));
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    save_checkpoint(trainer.model(), step, path);
    result.checkpoint_paths.push_back(path);
    result.final_checkpoint = path;
  };

  for (int it = 1; it <= cfg.iterations; ++it) {
    std::vector<nn::Tensor> contents, styles;
    std::vector<BitMessage> msgs;
    for (int b = 0; b < cfg.batch; ++b) {
      contents.push_back(content.sample(trainer.crop_rng()));
      styles.push_back(style.sample(trainer.crop_rng()));
      msgs.push_back(trainer.next_message());
    }
    const StepMetrics m = trainer.train_step(contents, styles, msgs);
    csv << metrics_csv_row(m) << "\n";
    result.metrics.push_back(m);
    if (!quiet && (it % 200 == 0 || it == 1))
      std::cerr << "step " << it << "/" << cfg.iterations << "  d=" << m.loss_d
                << " g_style=" << m.loss_g_style << " l_c=" << m.l_c << " l_m=" << m.l_m
                << " bit_acc=" << m.bit_acc << "\n";
    if (it % cfg.save_every == 0) save(static_cast<uint64_t>(it));
  }
  if (result.final_checkpoint.empty() ||
      cfg.iterations % cfg.save_every != 0)
    save(static_cast<uint64_t>(cfg.iterations));
  csv.close();
  return result;
}

}  // namespace stego
