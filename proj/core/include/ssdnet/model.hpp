/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ssdnet/nn.hpp"
#include "ssdnet/tensor.hpp"

namespace ssdnet {

// Architecture hyperparameters. Width is the trunk channel count; the
// cascade stacks `cascade_depth` decomposition/communication pairs, each
// decomposition block running `ast_depth` attention blocks at half
// resolution.
struct ModelConfig {
  int width = 32;
  int cascade_depth = 4;
  int ast_depth = 4;
  int heads = 2;
  real attn_eps = real(1e-6);
  real gate_scale_init = real(0.0);
  real fuse_weight_init = real(0.5);
  real temperature_init = real(1.0);

  void validate() const;
};

// Ordered, uniquely named collection of trainable tensors. Iteration order is
// insertion order and defines the checkpoint layout.
class ParameterStore {
 public:
  void add(const std::string& name, Tensor t);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }

  std::int64_t total_params() const;
  void zero_grads();

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// The two feature streams threaded through the cascade: f_d carries
// degradation features, f_c carries clear-scene features. Shapes match.
struct BranchPair {
  Tensor f_d;
  Tensor f_c;
};

struct ForwardResult {
  Tensor x_c;      // predicted clean image
  Tensor x_d;      // predicted degradation residual map
  Tensor x_prime;  // x_c + x_d, the recomposed input
};

// Builds the full parameter set for a config. Conv weights use uniform
// fan-in init, biases start at zero, coupling scales at gate_scale_init,
// fusion weights at fuse_weight_init, temperatures at temperature_init.
ParameterStore init_params(const ModelConfig& cfg, std::uint64_t seed);

// Closed-form trainable-parameter count; affine in cascade_depth and in
// ast_depth with positive slopes.
std::int64_t param_count(const ModelConfig& cfg);

// Two independent 3x3 convolutions lift the 3-channel image into the two
// C-channel branch features. H and W must be even and >= 8.
BranchPair embed(const Tensor& x, const ParameterStore& params, const ModelConfig& cfg);

// Dense/sparse fusion of attention scores: softmax rows blended with
// ReLU-normalized rows through the two learnable weights.
Tensor attention_fuse(const Tensor& scores, const Tensor& w_dense, const Tensor& w_sparse, real eps);

// Channel-token attention over q/k/v feature maps (N x C x h x w): per head,
// L2-normalized channel similarity scaled by a learnable temperature, fused
// dense/sparse weighting, applied to v. Returns the merged heads, without
// output projection or residual.
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& temperature,
                      const Tensor& w_dense, const Tensor& w_sparse, real eps, int heads);

// Full attention operator under `prefix`: qkv lift (pointwise then
// depthwise), attention_core, output projection, residual onto f.
Tensor adaptive_sparse_attention(const Tensor& f, const ParameterStore& params,
                                 const std::string& prefix, const ModelConfig& cfg);

// Pre-norm transformer block: f + attn(ln1(f)), then + ffn(ln2(.)) with a
// depthwise 2x-expansion feed-forward.
Tensor ast_block(const Tensor& f, const ParameterStore& params, const std::string& prefix,
                 const ModelConfig& cfg);

// Depthwise-separable projection to `out_channels` followed by a
// squeeze-excite channel gate.
Tensor channel_attention_dsc(const Tensor& f, const ParameterStore& params,
                             const std::string& prefix, int out_channels);

// Parallel decomposition block (prefix "pfdb.<n>"): transformer-driven
// degradation branch with a half-resolution attention stack, CNN-driven
// clear branch with stacked channel attention.
BranchPair pfdb_forward(const BranchPair& pair, const ParameterStore& params,
                        const std::string& prefix, const ModelConfig& cfg);

// Bidirectional communication block (prefix "bfcb.<n>"): sigmoid-gated
// residual exchange scaled by the learnable coupling weights. Preserves the
// elementwise sum of the two branches.
BranchPair bfcb_forward(const BranchPair& pair, const ParameterStore& params,
                        const std::string& prefix);

// 3x3 heads mapping the final branch features to the clean image and the
// degradation residual map. No output activation.
std::pair<Tensor, Tensor> reconstruct(const BranchPair& pair, const ParameterStore& params);

// Whole network: embed, cascade of pfdb+bfcb, reconstruct, recompose.
ForwardResult ssdnet_forward(const Tensor& x, const ModelConfig& cfg, const ParameterStore& params);

}  // namespace ssdnet
