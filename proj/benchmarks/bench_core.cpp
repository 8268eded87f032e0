/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <benchmark/benchmark.h>

#include "ssdnet/loss.hpp"
#include "ssdnet/model.hpp"
#include "ssdnet/nn.hpp"
#include "ssdnet/trainer.hpp"

using namespace ssdnet;

namespace {

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = Tensor::uniform({1, c, 64, 64}, 1, -1.0, 1.0);
  Tensor w = Tensor::uniform({c, c, 3, 3}, 2, -0.1, 0.1);
  Tensor b = Tensor::uniform({c}, 3, -0.1, 0.1);
  const ConvSpec spec = ConvSpec::same(c, c, 3);
  for (auto _ : state) {
    Tensor y = conv2d(x, spec, w, b);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 64 * c * c * 9);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(16)->Arg(32);

void BM_DepthwiseSeparable(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = Tensor::uniform({1, c, 64, 64}, 1, -1.0, 1.0);
  Tensor dw_w = Tensor::uniform({c, 1, 3, 3}, 2, -0.3, 0.3);
  Tensor dw_b = Tensor::uniform({c}, 3, -0.1, 0.1);
  Tensor pw_w = Tensor::uniform({c, c, 1, 1}, 4, -0.3, 0.3);
  Tensor pw_b = Tensor::uniform({c}, 5, -0.1, 0.1);
  for (auto _ : state) {
    Tensor y = depthwise_separable(x, dw_w, dw_b, pw_w, pw_b);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_DepthwiseSeparable)->Arg(16)->Arg(32);

void BM_AttentionBlock(benchmark::State& state) {
  ModelConfig cfg;
  cfg.width = static_cast<int>(state.range(0));
  cfg.cascade_depth = 1;
  cfg.ast_depth = 1;
  ParameterStore params = init_params(cfg, 7);
  Tensor f = Tensor::uniform({1, cfg.width, 32, 32}, 9, -1.0, 1.0);
  for (auto _ : state) {
    Tensor y = ast_block(f, params, "pfdb.0.ast.0", cfg);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_AttentionBlock)->Arg(16)->Arg(32);

void BM_Ssim(benchmark::State& state) {
  Tensor e = Tensor::uniform({4, 3, 64, 64}, 11, 0.0, 1.0);
  Tensor r = Tensor::uniform({4, 3, 64, 64}, 12, 0.0, 1.0);
  for (auto _ : state) {
    Tensor s = ssim(e, r);
    benchmark::DoNotOptimize(s.item());
  }
}
BENCHMARK(BM_Ssim);

void BM_ForwardDeskScale(benchmark::State& state) {
  ModelConfig cfg;
  cfg.width = 16;
  cfg.cascade_depth = 2;
  cfg.ast_depth = 2;
  ParameterStore params = init_params(cfg, 13);
  Tensor x = Tensor::uniform({1, 3, 64, 64}, 15, 0.0, 1.0);
  for (auto _ : state) {
    ForwardResult out = ssdnet_forward(x, cfg, params);
    benchmark::DoNotOptimize(out.x_prime.data().data());
  }
}
BENCHMARK(BM_ForwardDeskScale);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.width = 16;
  cfg.cascade_depth = 2;
  cfg.ast_depth = 2;
  ParameterStore params = init_params(cfg, 17);
  OptimState optim;
  Tensor x = Tensor::uniform({4, 3, 64, 64}, 19, 0.0, 1.0);
  Tensor y = Tensor::uniform({4, 3, 64, 64}, 21, 0.0, 1.0);
  const LossWeights weights;
  for (auto _ : state) {
    params.zero_grads();
    Tape tape;
    TapeScope scope(tape);
    ForwardResult fwd = ssdnet_forward(x, cfg, params);
    Tensor loss = total_loss(fwd.x_c, y, fwd.x_prime, x, weights);
    tape.backward(loss);
    adam_step(params, optim, 3e-4);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
