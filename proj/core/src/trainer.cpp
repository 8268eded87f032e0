/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ssdnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (!(lr_start >= lr_end && lr_end > 0.0))
    throw ConfigError("train config: need lr_start >= lr_end > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
    throw ConfigError("train config: Adam betas must lie in [0,1)");
  if (adam_eps <= 0.0) throw ConfigError("train config: Adam eps must be positive");
  if (eval_every < 0) throw ConfigError("train config: eval_every must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("train config: grad_clip must be >= 0");
  loss_weights.validate();
}

void adam_step(ParameterStore& params, OptimState& state, double lr, double beta1, double beta2,
               double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (auto& [name, t] : params.entries()) {
    if (!t.has_grad()) throw GraphError("adam_step: missing gradient for parameter " + name);
    auto& mom = state.moments[name];
    if (mom.m.empty()) {
      mom.m.assign(static_cast<std::size_t>(t.numel()), real(0));
      mom.v.assign(static_cast<std::size_t>(t.numel()), real(0));
    }
    auto g = t.grad();
    auto d = t.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double m = beta1 * static_cast<double>(mom.m[i]) + (1.0 - beta1) * gi;
      const double v = beta2 * static_cast<double>(mom.v[i]) + (1.0 - beta2) * gi * gi;
      mom.m[i] = static_cast<real>(m);
      mom.v[i] = static_cast<real>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      d[i] = static_cast<real>(static_cast<double>(d[i]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

double lr_schedule(int epoch, int total_epochs, double lr_start, double lr_end) {
  if (total_epochs < 1) throw ValueError("lr_schedule: total_epochs must be >= 1");
  if (epoch < 0 || epoch >= total_epochs)
    throw ValueError("lr_schedule: epoch " + std::to_string(epoch) + " outside [0," +
                     std::to_string(total_epochs) + ")");
  if (!(lr_start >= lr_end && lr_end > 0.0))
    throw ValueError("lr_schedule: need lr_start >= lr_end > 0");
  if (total_epochs == 1) return lr_start;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_start + (lr_end - lr_start) * t;
}

namespace {

struct PairBuffers {
  ImageBuffer degraded;
  ImageBuffer clean;
};

std::vector<PairBuffers> load_pairs(const DatasetManifest& manifest) {
  if (manifest.pairs.empty()) throw ConfigError("manifest holds no image pairs");
  std::vector<PairBuffers> out(manifest.pairs.size());
  parallel_for(static_cast<std::int64_t>(manifest.pairs.size()), [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] = {read_ppm(manifest.pairs[static_cast<std::size_t>(i)].degraded),
                                        read_ppm(manifest.pairs[static_cast<std::size_t>(i)].clean)};
  });
  return out;
}

double global_grad_norm(const ParameterStore& params) {
  double s = 0.0;
  for (const auto& [name, t] : params.entries()) {
    if (!t.has_grad()) continue;
    for (real g : t.grad()) s += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(s);
}

void scale_grads(ParameterStore& params, double factor) {
  for (auto& [name, t] : params.entries()) {
    if (!t.has_grad()) continue;
    auto impl = t.impl();
    for (auto& g : impl->grad) g = static_cast<real>(static_cast<double>(g) * factor);
  }
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const DatasetManifest& manifest, const std::filesystem::path& out_dir) {
  model_cfg.validate();
  train_cfg.validate();
  const auto data = load_pairs(manifest);
  const std::size_t count = data.size();

  const bool writing = !out_dir.empty();
  std::filesystem::path log_path;
  if (writing) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    log_path = out_dir / "loss_log.txt";
    std::ofstream reset(log_path, std::ios::trunc);  // fresh log per run
  }

  ParameterStore params = init_params(model_cfg, train_cfg.seed);
  OptimState state;
  TrainResult result;

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;

  auto save_at = [&](const std::string& stem) {
    if (!writing) return;
    save_checkpoint(out_dir / (stem + ".ssdn"),
                    Checkpoint::from_store(model_cfg, params, state.step, &state));
  };

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, train_cfg.epochs, train_cfg.lr_start, train_cfg.lr_end);

    // Deterministic Fisher-Yates shuffle per (seed, epoch).
    Rng shuffle_rng(mix_seed(train_cfg.seed, 0x5350ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = count; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_below(i));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t end = std::min(count, start + static_cast<std::size_t>(train_cfg.batch_size));
      std::vector<ImageBuffer> xs, ys;
      xs.reserve(end - start);
      ys.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(data[order[i]].degraded);
        ys.push_back(data[order[i]].clean);
      }
      Tensor x = images_to_batch(xs);
      Tensor y = images_to_batch(ys);

      params.zero_grads();
      double loss_value = 0.0;
      {
        Tape tape;
        TapeScope scope(tape);
        ForwardResult fwd = ssdnet_forward(x, model_cfg, params);
        Tensor loss = total_loss(fwd.x_c, y, fwd.x_prime, x, train_cfg.loss_weights);
        loss_value = static_cast<double>(loss.item());
        if (!std::isfinite(loss_value))
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             " batch " + std::to_string(batch_index));
        tape.backward(loss);
      }
      if (train_cfg.grad_clip > 0.0) {
        const double norm = global_grad_norm(params);
        if (norm > train_cfg.grad_clip) scale_grads(params, train_cfg.grad_clip / norm);
      }
      adam_step(params, state, lr, train_cfg.adam_beta1, train_cfg.adam_beta2, train_cfg.adam_eps);
      epoch_loss += loss_value * static_cast<double>(end - start);
      ++batch_index;
    }
    epoch_loss /= static_cast<double>(count);
    result.log.push_back({epoch, epoch_loss, lr});

    if (writing) {
      std::ofstream log(log_path, std::ios::app);
      if (!log) throw IoError("cannot append to " + log_path.string());
      std::ostringstream line;
      line.precision(9);
      line << std::scientific << epoch << ' ' << epoch_loss << ' ' << lr << '\n';
      log << line.str();
    }
    if (train_cfg.eval_every > 0 && (epoch + 1) % train_cfg.eval_every == 0 &&
        epoch + 1 < train_cfg.epochs) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "ckpt_%05d", epoch + 1);
      save_at(stem);
    }
  }

  result.final = Checkpoint::from_store(model_cfg, params, state.step, &state);
  save_at("ckpt_final");
  return result;
}

MetricsReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest) {
  const ParameterStore params = ckpt.to_store();
  const auto data = load_pairs(manifest);
  MetricsReport report;
  report.rows.resize(data.size());

  parallel_for(static_cast<std::int64_t>(data.size()), [&](std::int64_t i) {
    const auto& pair = data[static_cast<std::size_t>(i)];
    const ForwardResult fwd = ssdnet_forward(image_to_tensor(pair.degraded), ckpt.config, params);
    const ImageBuffer prediction = tensor_to_image(fwd.x_c, /*clamp=*/true);
    MetricsRow row;
    row.path = manifest.pairs[static_cast<std::size_t>(i)].degraded.string();
    row.ssim = ssim_index(prediction, pair.clean);
    row.psnr = psnr(prediction, pair.clean);
    row.mse_x1000 = mse_scaled(prediction, pair.clean);
    row.uiqm = uiqm(prediction);
    row.uciqe = uciqe(prediction);
    report.rows[static_cast<std::size_t>(i)] = row;
  });
  report.finalize();
  return report;
}

}  // namespace ssdnet
