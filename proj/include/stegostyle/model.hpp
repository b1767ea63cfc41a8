// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <vector>

#include "stegostyle/codec.hpp"
#include "stegostyle/config.hpp"
#include "stegostyle/extractor.hpp"
#include "stegostyle/srm.hpp"
#include "stegostyle/stylizer.hpp"

namespace stego {

/// The full parameter bundle: preprocessing bank + head, encoder, decoder,
/// discriminator and extractor, built deterministically from the config
/// seed. Move-only; parameter pointers must be collected after the object
/// reaches its final address.
struct Model {
  TrainConfig cfg;
  FilterBank prep_bank;
  PreprocessHead head;
  Encoder encoder;
  Decoder decoder;
  Discriminator disc;
  Extractor extractor;

  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  static Model build(TrainConfig cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    Model m;
    m.cfg = cfg;
    Rng rng_prep = root.fork(1);
    m.prep_bank = cfg.srm_filters ? FilterBank::srm_init("prep.bank.kernels")
                                  : FilterBank::random_init("prep.bank.kernels", rng_prep);
    Rng rng_head = root.fork(2);
    m.head = PreprocessHead::init("prep.head", rng_head, cfg.msg_channels, cfg.leaky_slope);
    Rng rng_enc = root.fork(3);
    m.encoder = Encoder::init("encoder", rng_enc);
    Rng rng_dec = root.fork(4);
    m.decoder = Decoder::init("decoder", rng_dec, m.encoder.out_channels() + cfg.msg_channels);
    Rng rng_disc = root.fork(5);
    m.disc = Discriminator::init("disc", rng_disc, cfg.crop_size, cfg.leaky_slope);
    Rng rng_ext = root.fork(6);
    m.extractor = Extractor::init("extractor", rng_ext, cfg.msg_channels, cfg.attention_reduction,
                                  cfg.srm_filters, cfg.use_attention);
    return m;
  }

  SecretGrid grid_for(int img_h, int img_w) const {
    return SecretGrid::for_image(img_h, img_w, cfg.msg_channels);
  }

  /// Secret grid at training resolution.
  SecretGrid train_grid() const { return grid_for(cfg.crop_size, cfg.crop_size); }

  /// Stego image from a content image and a mapped secret grid.
  nn::Tensor stego_image(const nn::Tensor& content, const nn::Tensor& secret) const {
    nn::Tensor f = content_feature(content, prep_bank, head);
    nn::Tensor bound = bind(secret, f);
    nn::Tensor a = encoder.forward(content);
    return decoder.forward(nn::concat_channels(a, bound));
  }

  /// Stylized image with the message path zeroed (the "cover" of the
  /// security experiments).
  nn::Tensor cover_image(const nn::Tensor& content) const {
    const SecretGrid g = grid_for(content.shape()[0], content.shape()[1]);
    return stego_image(content, nn::Tensor::zeros({g.h, g.w, g.c}));
  }

  /// Serialization order: prep bank, prep head, encoder, decoder,
  /// discriminator, extractor.
  std::vector<nn::Parameter*> all_params() {
    std::vector<nn::Parameter*> out;
    out.push_back(&prep_bank.kernels);
    for (auto& l : head.layers) {
      out.push_back(&l.kernel);
      out.push_back(&l.bias);
    }
    encoder.collect(out);
    decoder.collect(out);
    disc.collect(out);
    extractor.collect(out);
    return out;
  }

  std::vector<nn::Parameter*> disc_params() {
    std::vector<nn::Parameter*> out;
    disc.collect(out);
    return out;
  }

  /// Joint generator-side set: encoder, decoder, preprocessing path and
  /// extractor, honoring frozen banks and the attention ablation flag.
  std::vector<nn::Parameter*> gen_params() {
    std::vector<nn::Parameter*> out;
    if (!prep_bank.frozen) out.push_back(&prep_bank.kernels);
    for (auto& l : head.layers) {
      out.push_back(&l.kernel);
      out.push_back(&l.bias);
    }
    encoder.collect(out);
    decoder.collect(out);
    extractor.collect_trainable(out);
    return out;
  }
};

}  // namespace stego
