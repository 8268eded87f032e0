/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ssdnet/model.hpp"
#include "ssdnet/synth.hpp"
#include "ssdnet/trainer.hpp"

namespace ssdnet_cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

// Fully resolved run configuration: model + training + synthesis settings,
// built from code defaults, then an optional key=value config file, then
// command-line overrides (which win).
struct CliConfig {
  ssdnet::ModelConfig model;
  ssdnet::TrainConfig train;
  ssdnet::DegradationPolicy policy;
  int n_train = 8;
  int n_test = 4;
  int image_width = 64;
  int image_height = 64;

  // Applies one key=value pair; unknown keys are rejected.
  void apply(const std::string& key, const std::string& value);
  // All keys in canonical order, for logging and round-trips.
  std::string to_text() const;
};

// Parses a flat key=value file (one pair per line, '#' comments).
void load_config_file(CliConfig& cfg, const std::filesystem::path& path);

struct CommonArgs {
  std::optional<std::filesystem::path> config_file;
  std::map<std::string, std::string> overrides;  // flag-level key=value wins over file

  CliConfig resolve() const;
};

int cmd_synth(const CommonArgs& args, const std::filesystem::path& out_dir);
int cmd_train(const CommonArgs& args, const std::filesystem::path& manifest,
              const std::filesystem::path& out_dir);
int cmd_eval(const CommonArgs& args, const std::filesystem::path& checkpoint,
             const std::filesystem::path& manifest, const std::filesystem::path& out_dir);
int cmd_infer(const CommonArgs& args, const std::filesystem::path& checkpoint,
              const std::filesystem::path& input, const std::filesystem::path& out_dir);
int cmd_gradcheck(const CommonArgs& args, int size);
int cmd_params(const CommonArgs& args);

// CLI11-based front end; maps errors onto the exit codes above.
int run(int argc, const char* const* argv);

}  // namespace ssdnet_cli
