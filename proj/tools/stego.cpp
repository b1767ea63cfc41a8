// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.
//
// Operator entry points: train, embed, extract, eval, ablate, gen-data.
// Every failure exits nonzero with a single `error: ...` line on stderr.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stegostyle/checkpoint.hpp"
#include "stegostyle/dataset.hpp"
#include "stegostyle/eval.hpp"
#include "stegostyle/trainer.hpp"

namespace fs = std::filesystem;
using namespace stego;

namespace {

std::string lower_ext(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

void require_lossless_output(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return;
  fail("stego output must be lossless PNG; refusing extension `" + ext + "` (" + path + ")");
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void echo_config(const TrainConfig& cfg) {
  std::cout << "resolved config:\n";
  std::istringstream lines(cfg.to_kv_text());
  std::string line;
  while (std::getline(lines, line)) std::cout << "  " << line << "\n";
}

// train/ablate share the config flag set; flag assignments are recorded
// during parsing and applied on top of the config file afterwards, so the
// flag/file precedence does not depend on argument order
struct ConfigFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file (flags override it)");
    auto opt = [this, cmd](const char* flag, const char* key, const char* help) {
      return cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    opt("--content-dir", "content_dir", "directory of content PNGs");
    opt("--style-dir", "style_dir", "directory of style PNGs");
    opt("--out-dir", "out_dir", "run output directory (metrics, checkpoints)");
    opt("--iterations", "iterations", "training iterations");
    opt("--lr", "lr", "Adam learning rate");
    opt("--batch", "batch", "images per step");
    opt("--crop", "crop_size", "square crop size (multiple of 16)");
    opt("--lambda", "lambda", "style loss weight");
    opt("--mu", "mu", "secret loss weight");
    opt("--delta-tol", "delta_tol", "secret loss hinge slack");
    opt("--slope", "leaky_slope", "Leaky ReLU slope");
    opt("--attention-r", "attention_r", "channel attention reduction ratio");
    opt("--msg-len", "msg_len", "message length in bits");
    opt("--msg-channels", "msg_channels", "secret grid channels");
    opt("--seed", "seed", "master seed");
    opt("--msg-key", "msg_key", "stego key for the bit placement");
    opt("--save-every", "save_every", "checkpoint interval in steps");
    opt("--overfit-message", "overfit_message", "pin one message for the whole run (0/1)");
    opt("--attention", "use_attention", "channel attention on/off (0/1)");
    opt("--srm-filters", "srm_filters", "SRM filter init on/off (0/1)");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : TrainConfig::from_file(config_path);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    return cfg;
  }
};

int cmd_gen_data(const std::string& out, int n_content, int n_style, int size, uint64_t seed) {
  write_toy_dataset(out, n_content, n_style, size, seed);
  std::cout << "wrote " << n_content << " content and " << n_style << " style images ("
            << size << "x" << size << ") under " << out << "\n";
  return 0;
}

int cmd_train(const TrainConfig& cfg, bool quiet) {
  cfg.validate();
  echo_config(cfg);
  const RunResult r = run_training(cfg, quiet);
  std::cout << "metrics: " << r.metrics_csv << "\n";
  for (const auto& p : r.checkpoint_paths) std::cout << "checkpoint: " << p << "\n";
  std::cout << "final bit_acc: " << r.metrics.back().bit_acc << "\n";
  return 0;
}

int cmd_embed(const std::string& checkpoint, const std::string& content_path,
              const std::string& message_path, uint64_t key, const std::string& out_path) {
  require_lossless_output(out_path);
  const BitMessage msg = BitMessage::parse_text(read_text_file(message_path));
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const Model& model = *ckpt.model;
  std::cout << "embed: checkpoint=" << checkpoint << " content=" << content_path
            << " message=" << message_path << " key=" << key << " out=" << out_path << "\n";

  const ImageU8 content_img = read_png(content_path);
  const nn::Tensor content = image_to_tensor(content_img);
  const SecretGrid grid = model.grid_for(content.shape()[0], content.shape()[1]);
  std::cout << "capacity: " << grid.capacity() << " bits\n";
  std::cout << "payload: " << msg.length() << " bits\n";

  nn::NoGrad guard;
  const nn::Tensor stego = model.stego_image(content, map_bits(msg, grid, key));
  write_png(out_path, tensor_to_image(stego));
  std::cout << "wrote stego: " << out_path << "\n";
  return 0;
}

int cmd_extract(const std::string& checkpoint, const std::string& stego_path, uint64_t key,
                int length, const std::string& out_path, const std::string& format) {
  require(length > 0, "--len must be positive");
  require(format == "bits" || format == "hex", "--format must be `bits` or `hex`");
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  std::cout << "extract: checkpoint=" << checkpoint << " stego=" << stego_path << " key=" << key
            << " len=" << length << " out=" << out_path << " format=" << format << "\n";

  const nn::Tensor stego = image_to_tensor(read_png(stego_path));
  nn::NoGrad guard;
  const BitMessage msg = ckpt.model->extractor.extract(stego, key, length);
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) fail("cannot write message file: " + out_path);
  f << (format == "hex" ? msg.to_hex_string() : msg.to_bit_string()) << "\n";
  std::cout << "extracted " << msg.length() << " bits\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const std::string& content_dir,
             int trials, int ssim_pairs, const std::string& scenario, int pairs_per_class,
             int det_epochs, int min_pairs, bool divergence, uint64_t seed,
             const std::string& report_path) {
  require(!checkpoints.empty(), "eval needs at least one --checkpoint");
  std::cout << "eval: checkpoints=" << checkpoints.size() << " content-dir=" << content_dir
            << " trials=" << trials << " seed=" << seed << "\n";

  EvalReport report;
  LoadedCheckpoint newest = load_checkpoint(checkpoints.back());
  report.set_config_echo(newest.model->cfg.to_json());
  report.set_reference_points();

  CropSampler content = CropSampler::load(content_dir, newest.model->cfg.crop_size);
  Rng rng(mix64(seed ^ 0xe7a1));
  report.set_bit_accuracy(bit_accuracy(*newest.model, content, rng, trials), trials);
  if (ssim_pairs > 0)
    report.set_ssim(stego_cover_ssim(*newest.model, content, rng, ssim_pairs), ssim_pairs);

  if (!scenario.empty()) {
    ScenarioSpec spec;
    if (scenario == "ignorant") {
      spec.kind = ScenarioKind::Ignorant;
      require(checkpoints.size() >= 2, "ignorant scenario needs at least 2 checkpoints");
      spec.train_checkpoints = {checkpoints.front()};
      spec.test_checkpoints = {checkpoints.back()};
    } else if (scenario == "knowledgeable") {
      spec.kind = ScenarioKind::Knowledgeable;
      require(checkpoints.size() >= 3, "knowledgeable scenario needs at least 3 checkpoints");
      spec.train_checkpoints.assign(checkpoints.begin(), checkpoints.end() - 1);
      spec.test_checkpoints = {checkpoints.back()};
    } else if (scenario == "omniscient") {
      spec.kind = ScenarioKind::Omniscient;
      spec.train_checkpoints = checkpoints;
      spec.test_checkpoints = checkpoints;
    } else {
      fail("unknown scenario `" + scenario + "` (ignorant|knowledgeable|omniscient)");
    }
    DetectorConfig det;
    det.epochs = det_epochs;
    det.min_pairs_per_class = min_pairs;
    det.seed = seed;
    report.add_scenario(run_scenario(spec, content, pairs_per_class, det, seed));
  }

  if (divergence) {
    require(checkpoints.size() >= 2, "divergence needs at least 2 checkpoints");
    const nn::Tensor probe = content.sample(rng);
    Rng msg_rng(mix64(seed ^ 0xd1f));
    const BitMessage msg = BitMessage::random(msg_rng, newest.model->cfg.msg_len);
    double total = 0.0;
    int pairs = 0;
    std::vector<LoadedCheckpoint> models;
    for (const auto& p : checkpoints) models.push_back(load_checkpoint(p));
    for (size_t i = 0; i < models.size(); ++i)
      for (size_t j = i + 1; j < models.size(); ++j) {
        total += checkpoint_divergence(*models[i].model, *models[j].model, probe, msg);
        ++pairs;
      }
    report.set_divergence(total / pairs, static_cast<int>(models.size()));
  }

  std::cout << report.to_table();
  if (!report_path.empty()) {
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) fail("cannot write report: " + report_path);
    f << report.to_json_text() << "\n";
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

int cmd_ablate(const TrainConfig& base, int n_seeds, int trials, const std::string& report_path,
               bool quiet) {
  base.validate();
  echo_config(base);
  std::vector<uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(base.seed + static_cast<uint64_t>(i));
  const std::vector<AblationRow> rows = ablation_suite(base, seeds, trials, quiet);
  std::cout << "ablation (" << n_seeds << " seeds, " << trials << " eval trials)\n";
  for (const auto& r : rows) {
    std::cout << "  " << r.label << ": mean " << r.mean_accuracy << "  [";
    for (size_t i = 0; i < r.per_seed.size(); ++i) std::cout << (i ? " " : "") << r.per_seed[i];
    std::cout << "]\n";
  }
  if (!report_path.empty()) {
    EvalReport report;
    report.set_config_echo(base.to_json());
    report.add_ablation(rows);
    report.set_reference_points();
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) fail("cannot write report: " + report_path);
    f << report.to_json_text() << "\n";
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stegostyle: hide bit messages inside neural style transfer"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the procedural toy datasets");
  std::string gen_out = "data/toy";
  int gen_content = 8, gen_style = 4, gen_size = 96;
  uint64_t gen_seed = 1;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--content", gen_content, "number of content images");
  gen->add_option("--style", gen_style, "number of style images");
  gen->add_option("--size", gen_size, "image side length");
  gen->add_option("--seed", gen_seed, "generation seed");

  // train
  auto* train = app.add_subcommand("train", "train a model end to end");
  ConfigFlags train_flags;
  bool train_verbose = false;
  train_flags.attach(train);
  train->add_flag("--verbose", train_verbose, "print progress lines");

  // embed
  auto* embed = app.add_subcommand("embed", "embed a message into a stylized image");
  std::string em_ckpt, em_content, em_message, em_out;
  uint64_t em_key = 0;
  embed->add_option("--checkpoint", em_ckpt, "trained checkpoint")->required();
  embed->add_option("--content", em_content, "content PNG")->required();
  embed->add_option("--message", em_message, "message file (bit or hex text)")->required();
  embed->add_option("--key", em_key, "stego key (shared out of band)")->required();
  embed->add_option("--out", em_out, "output stego PNG")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "recover a message from a stego image");
  std::string ex_ckpt, ex_stego, ex_out, ex_format = "bits";
  uint64_t ex_key = 0;
  int ex_len = 0;
  extract->add_option("--checkpoint", ex_ckpt, "trained checkpoint")->required();
  extract->add_option("--stego", ex_stego, "stego PNG")->required();
  extract->add_option("--key", ex_key, "stego key")->required();
  extract->add_option("--len", ex_len, "message length in bits")->required();
  extract->add_option("--out", ex_out, "output message file")->required();
  extract->add_option("--format", ex_format, "bits|hex (default bits)");

  // eval
  auto* eval = app.add_subcommand("eval", "reliability / quality / security evaluation");
  std::vector<std::string> ev_ckpts;
  std::string ev_content_dir, ev_scenario, ev_report;
  int ev_trials = 50, ev_ssim_pairs = 10, ev_pairs = 200, ev_det_epochs = 5, ev_min_pairs = 200;
  bool ev_divergence = false;
  uint64_t ev_seed = 1;
  eval->add_option("--checkpoint", ev_ckpts, "checkpoint(s), oldest first")->required();
  eval->add_option("--content-dir", ev_content_dir, "content PNG directory")->required();
  eval->add_option("--trials", ev_trials, "bit accuracy trials");
  eval->add_option("--ssim-pairs", ev_ssim_pairs, "cover/stego SSIM pairs (0 disables)");
  eval->add_option("--scenario", ev_scenario, "ignorant|knowledgeable|omniscient");
  eval->add_option("--pairs", ev_pairs, "detector train pairs per class");
  eval->add_option("--det-epochs", ev_det_epochs, "detector training epochs");
  eval->add_option("--min-pairs", ev_min_pairs, "minimum pairs per class");
  eval->add_flag("--divergence", ev_divergence, "measure checkpoint divergence");
  eval->add_option("--seed", ev_seed, "evaluation seed");
  eval->add_option("--report", ev_report, "write JSON report here");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "attention/filter ablation trainings");
  ConfigFlags ab_flags;
  int ab_seeds = 3, ab_trials = 25;
  std::string ab_report;
  bool ab_verbose = false;
  ab_flags.attach(ablate);
  ablate->add_option("--seeds", ab_seeds, "number of seeds (consecutive from --seed)");
  ablate->add_option("--trials", ab_trials, "bit accuracy trials per run");
  ablate->add_option("--report", ab_report, "write JSON report here");
  ablate->add_flag("--verbose", ab_verbose, "print progress lines");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(gen_out, gen_content, gen_style, gen_size, gen_seed);
    if (train->parsed()) return cmd_train(train_flags.resolve(), !train_verbose);
    if (embed->parsed()) return cmd_embed(em_ckpt, em_content, em_message, em_key, em_out);
    if (extract->parsed())
      return cmd_extract(ex_ckpt, ex_stego, ex_key, ex_len, ex_out, ex_format);
    if (eval->parsed())
      return cmd_eval(ev_ckpts, ev_content_dir, ev_trials, ev_ssim_pairs, ev_scenario, ev_pairs,
                      ev_det_epochs, ev_min_pairs, ev_divergence, ev_seed, ev_report);
    if (ablate->parsed())
      return cmd_ablate(ab_flags.resolve(), ab_seeds, ab_trials, ab_report, !ab_verbose);
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
