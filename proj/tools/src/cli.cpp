/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet_cli/cli.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ssdnet/gradcheck.hpp"

namespace ssdnet_cli {

namespace {

using ssdnet::ConfigError;

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + " expects a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + " expects an integer, got '" + value + "'");
  }
}

std::array<double, 2> parse_range(const std::string& key, const std::string& value) {
  const std::size_t comma = value.find(',');
  if (comma == std::string::npos)
    throw ConfigError("config: key " + key + " expects 'lo,hi', got '" + value + "'");
  return {parse_double(key, value.substr(0, comma)), parse_double(key, value.substr(comma + 1))};
}

std::string range_text(const std::array<double, 2>& r) {
  std::ostringstream os;
  os << r[0] << ',' << r[1];
  return os.str();
}

}  // namespace

void CliConfig::apply(const std::string& key, const std::string& value) {
  // model
  if (key == "width") {
    model.width = static_cast<int>(parse_long(key, value));
  } else if (key == "cascade_depth") {
    model.cascade_depth = static_cast<int>(parse_long(key, value));
  } else if (key == "ast_depth") {
    model.ast_depth = static_cast<int>(parse_long(key, value));
  } else if (key == "heads") {
    model.heads = static_cast<int>(parse_long(key, value));
  } else if (key == "attn_eps") {
    model.attn_eps = static_cast<ssdnet::real>(parse_double(key, value));
  } else if (key == "gate_scale_init") {
    model.gate_scale_init = static_cast<ssdnet::real>(parse_double(key, value));
  } else if (key == "fuse_weight_init") {
    model.fuse_weight_init = static_cast<ssdnet::real>(parse_double(key, value));
  } else if (key == "temperature_init") {
    model.temperature_init = static_cast<ssdnet::real>(parse_double(key, value));
    // train
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(parse_long(key, value));
  } else if (key == "epochs") {
    train.epochs = static_cast<int>(parse_long(key, value));
  } else if (key == "lr_start") {
    train.lr_start = parse_double(key, value);
  } else if (key == "lr_end") {
    train.lr_end = parse_double(key, value);
  } else if (key == "adam_beta1") {
    train.adam_beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    train.adam_beta2 = parse_double(key, value);
  } else if (key == "adam_eps") {
    train.adam_eps = parse_double(key, value);
  } else if (key == "loss_alpha") {
    train.loss_weights.alpha = static_cast<ssdnet::real>(parse_double(key, value));
  } else if (key == "loss_beta") {
    train.loss_weights.beta = static_cast<ssdnet::real>(parse_double(key, value));
  } else if (key == "seed") {
    train.seed = static_cast<std::uint64_t>(parse_long(key, value));
  } else if (key == "eval_every") {
    train.eval_every = static_cast<int>(parse_long(key, value));
  } else if (key == "grad_clip") {
    train.grad_clip = parse_double(key, value);
    // synthesis
  } else if (key == "n_train") {
    n_train = static_cast<int>(parse_long(key, value));
  } else if (key == "n_test") {
    n_test = static_cast<int>(parse_long(key, value));
  } else if (key == "image_width") {
    image_width = static_cast<int>(parse_long(key, value));
  } else if (key == "image_height") {
    image_height = static_cast<int>(parse_long(key, value));
  } else if (key == "beta_red") {
    policy.beta_red = parse_range(key, value);
  } else if (key == "beta_green") {
    policy.beta_green = parse_range(key, value);
  } else if (key == "beta_blue") {
    policy.beta_blue = parse_range(key, value);
  } else if (key == "backscatter_red") {
    policy.backscatter_red = parse_range(key, value);
  } else if (key == "backscatter_green") {
    policy.backscatter_green = parse_range(key, value);
  } else if (key == "backscatter_blue") {
    policy.backscatter_blue = parse_range(key, value);
  } else if (key == "depth_range") {
    policy.depth_range = parse_range(key, value);
  } else if (key == "noise_std") {
    policy.noise_std = parse_double(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

std::string CliConfig::to_text() const {
  std::ostringstream os;
  os << "width=" << model.width << '\n'
     << "cascade_depth=" << model.cascade_depth << '\n'
     << "ast_depth=" << model.ast_depth << '\n'
     << "heads=" << model.heads << '\n'
     << "attn_eps=" << model.attn_eps << '\n'
     << "gate_scale_init=" << model.gate_scale_init << '\n'
     << "fuse_weight_init=" << model.fuse_weight_init << '\n'
     << "temperature_init=" << model.temperature_init << '\n'
     << "batch_size=" << train.batch_size << '\n'
     << "epochs=" << train.epochs << '\n'
     << "lr_start=" << train.lr_start << '\n'
     << "lr_end=" << train.lr_end << '\n'
     << "adam_beta1=" << train.adam_beta1 << '\n'
     << "adam_beta2=" << train.adam_beta2 << '\n'
     << "adam_eps=" << train.adam_eps << '\n'
     << "loss_alpha=" << train.loss_weights.alpha << '\n'
     << "loss_beta=" << train.loss_weights.beta << '\n'
     << "seed=" << train.seed << '\n'
     << "eval_every=" << train.eval_every << '\n'
     << "grad_clip=" << train.grad_clip << '\n'
     << "n_train=" << n_train << '\n'
     << "n_test=" << n_test << '\n'
     << "image_width=" << image_width << '\n'
     << "image_height=" << image_height << '\n'
     << "beta_red=" << range_text(policy.beta_red) << '\n'
     << "beta_green=" << range_text(policy.beta_green) << '\n'
     << "beta_blue=" << range_text(policy.beta_blue) << '\n'
     << "backscatter_red=" << range_text(policy.backscatter_red) << '\n'
     << "backscatter_green=" << range_text(policy.backscatter_green) << '\n'
     << "backscatter_blue=" << range_text(policy.backscatter_blue) << '\n'
     << "depth_range=" << range_text(policy.depth_range) << '\n'
     << "noise_std=" << policy.noise_std << '\n';
  return os.str();
}

void load_config_file(CliConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ssdnet::IoError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config file " + path.string() + ":" + std::to_string(lineno) +
                        ": expected key=value");
    cfg.apply(line.substr(0, eq), line.substr(eq + 1));
  }
}

CliConfig CommonArgs::resolve() const {
  CliConfig cfg;
  if (config_file) load_config_file(cfg, *config_file);
  for (const auto& [key, value] : overrides) cfg.apply(key, value);
  return cfg;
}

namespace {

void log_resolved(const CliConfig& cfg) {
  std::cout << "resolved config:\n" << cfg.to_text();
}

// Round-trip through the 8-bit quantizer that write_ppm applies.
ssdnet::ImageBuffer quantized(const ssdnet::ImageBuffer& img) {
  ssdnet::ImageBuffer out = img;
  for (auto& v : out.data)
    v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
  return out;
}

}  // namespace

int cmd_synth(const CommonArgs& args, const std::filesystem::path& out_dir) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  const ssdnet::DatasetOutput out =
      ssdnet::make_dataset(cfg.n_train, cfg.n_test, cfg.train.seed, cfg.policy, out_dir,
                           cfg.image_width, cfg.image_height);
  std::cout << "manifest: " << out.manifest_path.string() << '\n'
            << "params: " << out.params_path.string() << '\n'
            << "train pairs: " << out.train.pairs.size() << ", test pairs: " << out.test.pairs.size()
            << '\n';
  return kExitOk;
}

int cmd_train(const CommonArgs& args, const std::filesystem::path& manifest,
              const std::filesystem::path& out_dir) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  const ssdnet::DatasetManifest train_split = ssdnet::load_manifest(manifest, "train");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ssdnet::IoError("cannot create " + out_dir.string() + ": " + ec.message());
  ssdnet::write_text_file(out_dir / "config.resolved.txt", cfg.to_text());

  const ssdnet::TrainResult result = ssdnet::train(cfg.model, cfg.train, train_split, out_dir);
  std::cout << "trained " << cfg.train.epochs << " epochs over " << train_split.pairs.size()
            << " pairs\n"
            << "final loss: " << result.log.back().mean_loss << '\n'
            << "checkpoint: " << (out_dir / "ckpt_final.ssdn").string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::filesystem::path& checkpoint,
             const std::filesystem::path& manifest, const std::filesystem::path& out_dir) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  const ssdnet::Checkpoint ckpt = ssdnet::load_checkpoint(checkpoint);
  const ssdnet::DatasetManifest test_split = ssdnet::load_manifest(manifest, "test");
  const ssdnet::MetricsReport report = ssdnet::evaluate(ckpt, test_split);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ssdnet::IoError("cannot create " + out_dir.string() + ": " + ec.message());
  ssdnet::write_text_file(out_dir / "metrics.txt", report.to_table());
  ssdnet::write_text_file(out_dir / "metrics_records.txt", report.to_records());
  std::cout << report.to_table();
  std::cout << "reports: " << (out_dir / "metrics.txt").string() << ", "
            << (out_dir / "metrics_records.txt").string() << '\n';
  return kExitOk;
}

int cmd_infer(const CommonArgs& args, const std::filesystem::path& checkpoint,
              const std::filesystem::path& input, const std::filesystem::path& out_dir) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  const ssdnet::Checkpoint ckpt = ssdnet::load_checkpoint(checkpoint);
  const ssdnet::ParameterStore params = ckpt.to_store();
  const ssdnet::ImageBuffer in_img = ssdnet::read_ppm(input);

  const ssdnet::ForwardResult fwd =
      ssdnet::ssdnet_forward(ssdnet::image_to_tensor(in_img), ckpt.config, params);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ssdnet::IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const ssdnet::ImageBuffer xc = ssdnet::tensor_to_image(fwd.x_c, true);
  const ssdnet::ImageBuffer xp = ssdnet::tensor_to_image(fwd.x_prime, true);
  ssdnet::write_ppm(out_dir / "xc.ppm", xc);
  ssdnet::write_ppm(out_dir / "xprime.ppm", xp);

  // Residual at file precision: difference of the two quantized images,
  // mapped from [-1,1] onto [0,1]. The affine transform is recorded in the
  // sidecar, so xc.ppm + (xd.ppm * scale + offset) recovers xprime.ppm to
  // within one quantization step per pixel.
  const ssdnet::ImageBuffer xc_q = quantized(xc);
  const ssdnet::ImageBuffer xp_q = quantized(xp);
  ssdnet::ImageBuffer vis = ssdnet::ImageBuffer::blank(xc.width, xc.height);
  for (std::size_t i = 0; i < vis.data.size(); ++i)
    vis.data[i] = 0.5f * (xp_q.data[i] - xc_q.data[i] + 1.0f);
  ssdnet::write_ppm(out_dir / "xd.ppm", vis);
  ssdnet::write_text_file(out_dir / "xd_transform.txt",
                          "scale=2\noffset=-1\nresidual=xprime_minus_xc_at_file_precision\n");
  std::cout << "wrote " << (out_dir / "xc.ppm").string() << ", " << (out_dir / "xd.ppm").string()
            << " (+ sidecar), " << (out_dir / "xprime.ppm").string() << '\n';
  return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args, int size) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  if (size * size > 256 || cfg.model.width > 8)
    throw ConfigError("gradcheck: restricted to H*W <= 256 and width <= 8");

  // Central differences need more precision than the production 32-bit
  // storage; delegate to the 64-bit companion built from the same sources.
  std::error_code ec;
  const std::filesystem::path self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const std::filesystem::path helper = self.parent_path() / "ssdnet-gradcheck64";
    if (std::filesystem::exists(helper, ec)) {
      std::ostringstream cmd;
      cmd << helper.string() << " --width " << cfg.model.width << " --cascade-depth "
          << cfg.model.cascade_depth << " --ast-depth " << cfg.model.ast_depth << " --heads "
          << cfg.model.heads << " --seed " << cfg.train.seed << " --size " << size;
      const int status = std::system(cmd.str().c_str());
      if (status < 0) throw ssdnet::IoError("failed to launch " + helper.string());
      return WIFEXITED(status) ? WEXITSTATUS(status) : kExitNumeric;
    }
  }

  std::cout << "note: 64-bit companion not found, running at 32-bit storage precision\n";
  const ssdnet::ModelGradCheck result =
      ssdnet::model_gradient_check(cfg.model, size, size, cfg.train.seed, 1e-3);
  for (const auto& g : result.groups)
    std::cout << "group " << g.group << ": max relative error " << g.max_rel_err << '\n';
  std::cout << "overall max relative error " << result.max_rel_err << '\n';
  if (result.max_rel_err < 1e-3) {
    std::cout << "gradcheck PASS (< 1e-3)\n";
    return kExitOk;
  }
  std::cout << "gradcheck FAIL (>= 1e-3)\n";
  return kExitTolerance;
}

int cmd_params(const CommonArgs& args) {
  const CliConfig cfg = args.resolve();
  log_resolved(cfg);
  const std::int64_t count = ssdnet::param_count(cfg.model);
  std::cout << "trainable parameters: " << count << '\n';

  auto table = [&](bool vary_n) {
    std::cout << (vary_n ? "cascade-depth sweep (ast_depth=" + std::to_string(cfg.model.ast_depth) + ")"
                         : "ast-depth sweep (cascade_depth=" + std::to_string(cfg.model.cascade_depth) + ")")
              << '\n';
    std::int64_t prev = 0;
    for (int v = 2; v <= 6; ++v) {
      ssdnet::ModelConfig m = cfg.model;
      (vary_n ? m.cascade_depth : m.ast_depth) = v;
      const std::int64_t c = ssdnet::param_count(m);
      std::cout << "  " << (vary_n ? "N" : "M") << "=" << v << ": " << c;
      if (v > 2) std::cout << "  (delta " << (c - prev) << ")";
      std::cout << '\n';
      prev = c;
    }
  };
  table(true);
  table(false);
  return kExitOk;
}

}  // namespace ssdnet_cli
