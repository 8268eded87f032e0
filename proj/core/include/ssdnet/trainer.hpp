/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssdnet/loss.hpp"
#include "ssdnet/metrics.hpp"
#include "ssdnet/model.hpp"
#include "ssdnet/synth.hpp"

namespace ssdnet {

struct TrainConfig {
  int batch_size = 4;
  int epochs = 50;  // desk-scale default; the reference schedule runs 500
  double lr_start = 3e-4;
  double lr_end = 3e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  int eval_every = 10;    // checkpoint cadence in epochs; 0 = final only
  double grad_clip = 0.0;  // global-norm cap; 0 disables

  void validate() const;
};

// First/second Adam moments per parameter plus the shared step counter.
struct OptimState {
  struct Moments {
    std::vector<real> m;
    std::vector<real> v;
  };
  std::unordered_map<std::string, Moments> moments;
  std::int64_t step = 0;
};

// Bias-corrected Adam update over every parameter in the store. Gradients
// must be populated; a missing gradient raises an error naming the parameter.
void adam_step(ParameterStore& params, OptimState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Linear decay hitting lr_start at epoch 0 and lr_end at the last epoch.
double lr_schedule(int epoch, int total_epochs, double lr_start, double lr_end);

// Self-describing snapshot of model (and optionally optimizer) state.
struct Checkpoint {
  ModelConfig config;
  std::int64_t step = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
  bool has_optimizer = false;
  OptimState optim;

  static Checkpoint from_store(const ModelConfig& cfg, const ParameterStore& store,
                               std::int64_t step, const OptimState* optim = nullptr);
  // Rebuilds a ParameterStore, verifying names and shapes against the layout
  // implied by `expect`.
  ParameterStore to_store(const ModelConfig& expect) const;
  ParameterStore to_store() const { return to_store(config); }
};

// Binary format "SSDN": little-endian, version 1, ordered named tensors with
// 32-bit payloads, optional optimizer moments, trailing FNV-1a checksum.
// save -> load -> save is byte-identical.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochStat {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Checkpoint final;
  std::vector<EpochStat> log;
};

// Full supervised loop over a training manifest: deterministic batch order
// under the seed, per-epoch loss log, checkpoints at eval_every and at the
// end. With a non-empty out_dir, writes loss_log.txt plus ckpt_*.ssdn files.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const DatasetManifest& manifest,
                  const std::filesystem::path& out_dir = {});

// Metrics over a test manifest: the clean-image prediction is clamped to
// [0,1] and scored against the reference (SSIM/PSNR/MSE) and alone
// (UIQM/UCIQE). Rows keep manifest order.
MetricsReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest);

}  // namespace ssdnet
