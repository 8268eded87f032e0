/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/model.hpp"

#include <cmath>

namespace ssdnet {

void ModelConfig::validate() const {
  if (width < 1 || cascade_depth < 1 || ast_depth < 1 || heads < 1)
    throw ConfigError("model config: width, cascade_depth, ast_depth and heads must be >= 1");
  if (width % heads != 0)
    throw ConfigError("model config: width " + std::to_string(width) +
                      " not divisible by heads " + std::to_string(heads));
  if (attn_eps <= real(0)) throw ConfigError("model config: attn_eps must be positive");
}

void ParameterStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ConfigError("parameter store: duplicate name " + name);
  t.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(t));
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("parameter store: unknown name " + name);
  return entries_[it->second].second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("parameter store: unknown name " + name);
  return entries_[it->second].second;
}

std::int64_t ParameterStore::total_params() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

namespace {

int se_reduced(int c) { return c >= 4 ? c / 4 : 1; }

std::int64_t conv_params(int cin, int cout, int k, int groups, bool bias) {
  return static_cast<std::int64_t>(cout) * (cin / groups) * k * k + (bias ? cout : 0);
}

std::int64_t ca_params(int cin, int cout) {
  const int r = se_reduced(cout);
  return conv_params(cin, cin, 3, cin, true)   // depthwise
         + conv_params(cin, cout, 1, 1, true)  // pointwise
         + conv_params(cout, r, 1, 1, true)    // squeeze
         + conv_params(r, cout, 1, 1, true);   // excite
}

std::int64_t ast_params(int c, int heads) {
  return 2 * c                                     // ln1
         + conv_params(c, 3 * c, 1, 1, true)       // qkv pointwise
         + conv_params(3 * c, 3 * c, 3, 3 * c, true)  // qkv depthwise
         + heads + 2                               // temperature + fusion weights
         + conv_params(c, c, 1, 1, true)           // out projection
         + 2 * c                                   // ln2
         + conv_params(c, 2 * c, 1, 1, true)       // ffn expand
         + conv_params(2 * c, 2 * c, 3, 2 * c, true)  // ffn depthwise
         + conv_params(2 * c, c, 1, 1, true);      // ffn project
}

// Seed stream per parameter tensor, derived from the global seed and the
// insertion index so layouts stay stable.
struct InitCtx {
  ParameterStore* store;
  std::uint64_t seed;
  std::uint64_t counter = 0;

  void conv(const std::string& name, int cin, int cout, int k, int groups, bool bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin / groups) * k * k);
    store->add(name + ".weight",
               Tensor::uniform({cout, cin / groups, k, k}, mix_seed(seed, counter++), -bound, bound));
    if (bias) store->add(name + ".bias", Tensor::zeros({cout}));
  }
  void scalar(const std::string& name, real v) { store->add(name, Tensor::full({1}, v)); }
  void affine(const std::string& name, int c) {
    store->add(name + ".gain", Tensor::ones({1, c, 1, 1}));
    store->add(name + ".offset", Tensor::zeros({1, c, 1, 1}));
  }
  void ca(const std::string& prefix, int cin, int cout) {
    conv(prefix + ".dw", cin, cin, 3, cin, true);
    conv(prefix + ".pw", cin, cout, 1, 1, true);
    const int r = se_reduced(cout);
    conv(prefix + ".se.fc1", cout, r, 1, 1, true);
    conv(prefix + ".se.fc2", r, cout, 1, 1, true);
    // Gates start nearly open; a 0.5 gate at every stage attenuates the
    // stacked blocks and stalls early training.
    auto bias = store->get(prefix + ".se.fc2.bias").mutable_data();
    std::fill(bias.begin(), bias.end(), real(2));
  }
  void ast(const std::string& prefix, const ModelConfig& cfg) {
    const int c = cfg.width;
    affine(prefix + ".ln1", c);
    conv(prefix + ".qkv.pw", c, 3 * c, 1, 1, true);
    conv(prefix + ".qkv.dw", 3 * c, 3 * c, 3, 3 * c, true);
    store->add(prefix + ".temp", Tensor::full({cfg.heads}, cfg.temperature_init));
    scalar(prefix + ".w_dense", cfg.fuse_weight_init);
    scalar(prefix + ".w_sparse", cfg.fuse_weight_init);
    conv(prefix + ".proj", c, c, 1, 1, true);
    affine(prefix + ".ln2", c);
    conv(prefix + ".ffn.expand", c, 2 * c, 1, 1, true);
    conv(prefix + ".ffn.dw", 2 * c, 2 * c, 3, 2 * c, true);
    conv(prefix + ".ffn.proj", 2 * c, c, 1, 1, true);
    // Identity at init: both residual branches start silent, so stacking
    // depth does not perturb the signal path before training shapes it.
    auto zero_out = [this](const std::string& name) {
      auto d = store->get(name).mutable_data();
      std::fill(d.begin(), d.end(), real(0));
    };
    zero_out(prefix + ".proj.weight");
    zero_out(prefix + ".ffn.proj.weight");
  }
};

Tensor get_or_undefined(const ParameterStore& p, const std::string& name) {
  return p.has(name) ? p.get(name) : Tensor();
}

Tensor apply_conv(const Tensor& x, const ParameterStore& p, const std::string& prefix,
                  const ConvSpec& spec) {
  return conv2d(x, spec, p.get(prefix + ".weight"), get_or_undefined(p, prefix + ".bias"));
}

}  // namespace

ParameterStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterStore store;
  InitCtx ctx{&store, seed};
  const int c = cfg.width;

  ctx.conv("embed.d", 3, c, 3, 1, true);
  ctx.conv("embed.c", 3, c, 3, 1, true);

  for (int n = 0; n < cfg.cascade_depth; ++n) {
    const std::string pf = "pfdb." + std::to_string(n);
    ctx.ca(pf + ".d.ca_inner", c, c);
    ctx.ca(pf + ".d.ca_outer", 2 * c, c);
    for (int m = 0; m < cfg.ast_depth; ++m) ctx.ast(pf + ".ast." + std::to_string(m), cfg);
    ctx.conv(pf + ".merge", 2 * c, c, 1, 1, true);
    ctx.ca(pf + ".c.ca_inner", c, c);
    ctx.ca(pf + ".c.ca_outer", 2 * c, c);

    const std::string bf = "bfcb." + std::to_string(n);
    ctx.conv(bf + ".gate_cd.conv1", c, c, 1, 1, true);
    ctx.conv(bf + ".gate_cd.conv2", c, c, 1, 1, true);
    ctx.conv(bf + ".gate_dc.conv1", c, c, 1, 1, true);
    ctx.conv(bf + ".gate_dc.conv2", c, c, 1, 1, true);
    ctx.scalar(bf + ".w_cd", cfg.gate_scale_init);
    ctx.scalar(bf + ".w_dc", cfg.gate_scale_init);
  }

  ctx.conv("recon.c", c, 3, 3, 1, true);
  ctx.conv("recon.d", c, 3, 3, 1, true);
  return store;
}

std::int64_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  const int c = cfg.width;
  const std::int64_t embed = 2 * conv_params(3, c, 3, 1, true);
  const std::int64_t recon = 2 * conv_params(c, 3, 3, 1, true);
  const std::int64_t pfdb_fixed = 2 * (ca_params(c, c) + ca_params(2 * c, c))  // both branches
                                  + conv_params(2 * c, c, 1, 1, true);         // merge
  const std::int64_t bfcb = 4 * conv_params(c, c, 1, 1, true) + 2;
  const std::int64_t per_stage = pfdb_fixed + bfcb + static_cast<std::int64_t>(cfg.ast_depth) * ast_params(c, cfg.heads);
  return embed + recon + static_cast<std::int64_t>(cfg.cascade_depth) * per_stage;
}

BranchPair embed(const Tensor& x, const ParameterStore& params, const ModelConfig& cfg) {
  cfg.validate();
  if (x.rank() != 4 || x.shape()[1] != 3)
    throw ShapeError("embed: input must be N x 3 x H x W, got " + shape_str(x.shape()));
  const std::int64_t h = x.shape()[2], w = x.shape()[3];
  if (h < 8 || w < 8 || h % 2 != 0 || w % 2 != 0)
    throw ShapeError("embed: spatial extents must be even and >= 8, got " + shape_str(x.shape()));
  const ConvSpec spec = ConvSpec::same(3, cfg.width, 3);
  return BranchPair{apply_conv(x, params, "embed.d", spec), apply_conv(x, params, "embed.c", spec)};
}

Tensor attention_fuse(const Tensor& scores, const Tensor& w_dense, const Tensor& w_sparse, real eps) {
  const int axis = scores.rank() - 1;
  Tensor dense = softmax(scores, axis);
  Tensor positive = relu(scores);
  Tensor denom = add(reduce_sum(positive, axis, true), Tensor::scalar(eps));
  Tensor sparse = div(positive, denom);
  return add(mul(dense, w_dense), mul(sparse, w_sparse));
}

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& temperature,
                      const Tensor& w_dense, const Tensor& w_sparse, real eps, int heads) {
  if (q.rank() != 4) throw ShapeError("attention_core: q/k/v must be N x C x h x w");
  const std::int64_t n = q.shape()[0], c = q.shape()[1], h = q.shape()[2], w = q.shape()[3];
  if (c % heads != 0)
    throw ShapeError("attention_core: channels " + std::to_string(c) + " not divisible by heads " +
                     std::to_string(heads));
  if (temperature.numel() != heads)
    throw ShapeError("attention_core: temperature must hold one scalar per head");
  const std::int64_t d = c / heads;
  const std::int64_t pixels = h * w;

  Tensor merged;
  for (int head = 0; head < heads; ++head) {
    Tensor qh = reshape(slice(q, 1, head * d, d), {n, d, pixels});
    Tensor kh = reshape(slice(k, 1, head * d, d), {n, d, pixels});
    Tensor vh = reshape(slice(v, 1, head * d, d), {n, d, pixels});
    Tensor qn = l2_normalize(qh, 2, eps);
    Tensor kn = l2_normalize(kh, 2, eps);
    Tensor scores = mul(matmul(qn, transpose_last2(kn)), slice(temperature, 0, head, 1));
    Tensor weights = attention_fuse(scores, w_dense, w_sparse, eps);
    Tensor oh = reshape(matmul(weights, vh), {n, d, h, w});
    merged = head == 0 ? oh : concat_channels(merged, oh);
  }
  return merged;
}

namespace {

// qkv lift + fused attention + projection, without the residual. The block
// wrapper adds its own skip connection around this.
Tensor attention_body(const Tensor& f, const ParameterStore& p, const std::string& prefix,
                      const ModelConfig& cfg) {
  const int c = cfg.width;
  Tensor qkv = apply_conv(f, p, prefix + ".qkv.pw", ConvSpec::pointwise(c, 3 * c));
  qkv = apply_conv(qkv, p, prefix + ".qkv.dw", ConvSpec::depthwise(3 * c, 3));
  Tensor q = slice(qkv, 1, 0, c);
  Tensor k = slice(qkv, 1, c, c);
  Tensor v = slice(qkv, 1, 2 * c, c);
  Tensor attended = attention_core(q, k, v, p.get(prefix + ".temp"), p.get(prefix + ".w_dense"),
                                   p.get(prefix + ".w_sparse"), cfg.attn_eps, cfg.heads);
  return apply_conv(attended, p, prefix + ".proj", ConvSpec::pointwise(c, c));
}

Tensor ffn_body(const Tensor& f, const ParameterStore& p, const std::string& prefix,
                const ModelConfig& cfg) {
  const int c = cfg.width;
  Tensor y = apply_conv(f, p, prefix + ".ffn.expand", ConvSpec::pointwise(c, 2 * c));
  y = apply_conv(y, p, prefix + ".ffn.dw", ConvSpec::depthwise(2 * c, 3));
  y = relu(y);
  return apply_conv(y, p, prefix + ".ffn.proj", ConvSpec::pointwise(2 * c, c));
}

Tensor layernorm_at(const Tensor& f, const ParameterStore& p, const std::string& prefix) {
  return layernorm_channels(f, p.get(prefix + ".gain"), p.get(prefix + ".offset"), real(1e-5));
}

}  // namespace

Tensor adaptive_sparse_attention(const Tensor& f, const ParameterStore& params,
                                 const std::string& prefix, const ModelConfig& cfg) {
  return add(f, attention_body(f, params, prefix, cfg));
}

Tensor ast_block(const Tensor& f, const ParameterStore& params, const std::string& prefix,
                 const ModelConfig& cfg) {
  Tensor y = add(f, attention_body(layernorm_at(f, params, prefix + ".ln1"), params, prefix, cfg));
  return add(y, ffn_body(layernorm_at(y, params, prefix + ".ln2"), params, prefix, cfg));
}

Tensor channel_attention_dsc(const Tensor& f, const ParameterStore& params,
                             const std::string& prefix, int out_channels) {
  const int cin = static_cast<int>(f.shape()[1]);
  Tensor y = apply_conv(f, params, prefix + ".dw", ConvSpec::depthwise(cin, 3));
  y = apply_conv(y, params, prefix + ".pw", ConvSpec::pointwise(cin, out_channels));
  const int r = se_reduced(out_channels);
  Tensor g = global_avg_pool(y);
  g = apply_conv(g, params, prefix + ".se.fc1", ConvSpec::pointwise(out_channels, r));
  g = relu(g);
  g = apply_conv(g, params, prefix + ".se.fc2", ConvSpec::pointwise(r, out_channels));
  g = sigmoid(g);
  return mul(y, g);
}

BranchPair pfdb_forward(const BranchPair& pair, const ParameterStore& params,
                        const std::string& prefix, const ModelConfig& cfg) {
  const int c = cfg.width;
  if (pair.f_d.shape() != pair.f_c.shape())
    throw ShapeError("pfdb_forward: branch shapes disagree");
  if (pair.f_d.shape()[2] % 2 != 0 || pair.f_d.shape()[3] % 2 != 0)
    throw ShapeError("pfdb_forward: spatial extents must be even for the attention sandwich");

  // Degradation branch: stacked channel attention plus the half-resolution
  // transformer path merged back in.
  Tensor d_inner = channel_attention_dsc(pair.f_d, params, prefix + ".d.ca_inner", c);
  Tensor d_main = channel_attention_dsc(concat_channels(pair.f_d, d_inner), params,
                                        prefix + ".d.ca_outer", c);
  Tensor low = resize_bilinear(pair.f_d, 0.5);
  Tensor a = low;
  for (int m = 0; m < cfg.ast_depth; ++m)
    a = ast_block(a, params, prefix + ".ast." + std::to_string(m), cfg);
  Tensor merged = apply_conv(concat_channels(a, low), params, prefix + ".merge",
                             ConvSpec::pointwise(2 * c, c));
  Tensor f_d = add(d_main, resize_bilinear(merged, 2.0));

  // Clear branch: pure stacked channel attention.
  Tensor c_inner = channel_attention_dsc(pair.f_c, params, prefix + ".c.ca_inner", c);
  Tensor f_c = channel_attention_dsc(concat_channels(pair.f_c, c_inner), params,
                                     prefix + ".c.ca_outer", c);
  return BranchPair{f_d, f_c};
}

BranchPair bfcb_forward(const BranchPair& pair, const ParameterStore& params,
                        const std::string& prefix) {
  if (pair.f_d.shape() != pair.f_c.shape())
    throw ShapeError("bfcb_forward: branch shapes disagree");
  const int c = static_cast<int>(pair.f_d.shape()[1]);
  const ConvSpec pw = ConvSpec::pointwise(c, c);

  Tensor gate_cd = sigmoid(apply_conv(relu(apply_conv(pair.f_d, params, prefix + ".gate_cd.conv1", pw)),
                                      params, prefix + ".gate_cd.conv2", pw));
  Tensor gate_dc = sigmoid(apply_conv(relu(apply_conv(pair.f_c, params, prefix + ".gate_dc.conv1", pw)),
                                      params, prefix + ".gate_dc.conv2", pw));

  Tensor res_cd = mul(mul(pair.f_c, gate_cd), params.get(prefix + ".w_cd"));
  Tensor res_dc = mul(mul(pair.f_d, gate_dc), params.get(prefix + ".w_dc"));

  // Single exchange term keeps the branch sum conserved.
  Tensor delta = sub(res_cd, res_dc);
  return BranchPair{add(pair.f_d, delta), sub(pair.f_c, delta)};
}

std::pair<Tensor, Tensor> reconstruct(const BranchPair& pair, const ParameterStore& params) {
  const int c = static_cast<int>(pair.f_c.shape()[1]);
  const ConvSpec spec = ConvSpec::same(c, 3, 3);
  Tensor x_c = apply_conv(pair.f_c, params, "recon.c", spec);
  Tensor x_d = apply_conv(pair.f_d, params, "recon.d", spec);
  return {x_c, x_d};
}

ForwardResult ssdnet_forward(const Tensor& x, const ModelConfig& cfg, const ParameterStore& params) {
  for (real v : x.data())
    if (!(v >= real(0) && v <= real(1)))
      throw ValueError("ssdnet_forward: input values must lie in [0,1]");
  BranchPair pair = embed(x, params, cfg);
  for (int n = 0; n < cfg.cascade_depth; ++n) {
    pair = pfdb_forward(pair, params, "pfdb." + std::to_string(n), cfg);
    pair = bfcb_forward(pair, params, "bfcb." + std::to_string(n));
  }
  auto [x_c, x_d] = reconstruct(pair, params);
  return ForwardResult{x_c, x_d, add(x_c, x_d)};
}

}  // namespace ssdnet
