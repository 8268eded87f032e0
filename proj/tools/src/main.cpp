/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ssdnet_cli/cli.hpp"

namespace ssdnet_cli {

namespace {

// Registers the shared --config/--seed/override flags on a subcommand.
struct CommonFlags {
  std::string config_file;
  std::string seed, epochs, width, cascade_depth, ast_depth, batch_size, n_train, n_test, size;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat key=value config file");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--width", width, "trunk channel count C");
    app->add_option("--cascade-depth", cascade_depth, "number N of block pairs");
    app->add_option("--ast-depth", ast_depth, "number M of attention blocks per stage");
    app->add_option("--batch-size", batch_size, "training batch size");
    app->add_option("--n-train", n_train, "training pair count (synth)");
    app->add_option("--n-test", n_test, "test pair count (synth)");
    app->add_option("--size", size, "square image extent (synth)");
  }

  CommonArgs to_args() const {
    CommonArgs args;
    if (!config_file.empty()) args.config_file = config_file;
    auto put = [&args](const char* key, const std::string& v) {
      if (!v.empty()) args.overrides[key] = v;
    };
    put("seed", seed);
    put("epochs", epochs);
    put("width", width);
    put("cascade_depth", cascade_depth);
    put("ast_depth", ast_depth);
    put("batch_size", batch_size);
    put("n_train", n_train);
    put("n_test", n_test);
    if (!size.empty()) {
      args.overrides["image_width"] = size;
      args.overrides["image_height"] = size;
    }
    return args;
  }
};

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"ssdnet: single-scale decomposition network for underwater image enhancement"};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, eval_flags, infer_flags, grad_flags, params_flags;
  std::string synth_out, train_manifest, train_out, eval_ckpt, eval_manifest, eval_out;
  std::string infer_ckpt, infer_input, infer_out;
  int grad_size = 8;

  CLI::App* synth = app.add_subcommand("synth", "generate a paired synthetic dataset");
  synth_flags.attach(synth);
  synth->add_option("--out", synth_out, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train on a dataset manifest");
  train_flags.attach(train);
  train->add_option("--manifest", train_manifest, "manifest.txt path")->required();
  train->add_option("--out", train_out, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval_flags.attach(eval);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--manifest", eval_manifest, "manifest.txt path")->required();
  eval->add_option("--out", eval_out, "output directory")->required();

  CLI::App* infer = app.add_subcommand("infer", "decompose one image");
  infer_flags.attach(infer);
  infer->add_option("--checkpoint", infer_ckpt, "checkpoint path")->required();
  infer->add_option("--input", infer_input, "input PPM image")->required();
  infer->add_option("--out", infer_out, "output directory")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full loss");
  grad_flags.attach(gradcheck);
  gradcheck->add_option("--gradcheck-size", grad_size, "probe image extent (default 8)");

  CLI::App* params = app.add_subcommand("params", "parameter count and depth sweeps");
  params_flags.attach(params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags.to_args(), synth_out);
    if (train->parsed()) return cmd_train(train_flags.to_args(), train_manifest, train_out);
    if (eval->parsed()) return cmd_eval(eval_flags.to_args(), eval_ckpt, eval_manifest, eval_out);
    if (infer->parsed()) return cmd_infer(infer_flags.to_args(), infer_ckpt, infer_input, infer_out);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_flags.to_args(), grad_size);
    if (params->parsed()) return cmd_params(params_flags.to_args());
  } catch (const ssdnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ssdnet::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ssdnet::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ssdnet::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ssdnet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace ssdnet_cli

int main(int argc, char** argv) { return ssdnet_cli::run(argc, argv); }
