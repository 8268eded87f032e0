/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <bit>
#include <cstring>
#include <fstream>

#include "ssdnet/trainer.hpp"

namespace ssdnet {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'D', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const std::vector<unsigned char>& bytes, std::size_t len) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

struct Writer {
  std::vector<unsigned char> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void payload(const Tensor& t) {
    for (real v : t.data()) f32(static_cast<float>(v));
  }
};

struct Reader {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;
  std::size_t limit;  // excludes trailing checksum
  std::string origin;

  void need(std::size_t n) {
    if (limit - pos < n)
      throw FormatError("checkpoint " + origin + " truncated at byte " + std::to_string(pos));
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

Checkpoint Checkpoint::from_store(const ModelConfig& cfg, const ParameterStore& store,
                                  std::int64_t step, const OptimState* optim) {
  Checkpoint c;
  c.config = cfg;
  c.step = step;
  for (const auto& [name, t] : store.entries()) c.tensors.emplace_back(name, t.clone());
  if (optim != nullptr) {
    c.has_optimizer = true;
    c.optim.step = optim->step;
    for (const auto& [name, t] : store.entries()) {
      auto it = optim->moments.find(name);
      if (it == optim->moments.end() || it->second.m.empty()) {
        OptimState::Moments zero;
        zero.m.assign(static_cast<std::size_t>(t.numel()), real(0));
        zero.v.assign(static_cast<std::size_t>(t.numel()), real(0));
        c.optim.moments.emplace(name, std::move(zero));
      } else {
        c.optim.moments.emplace(name, it->second);
      }
    }
  }
  return c;
}

ParameterStore Checkpoint::to_store(const ModelConfig& expect) const {
  const ParameterStore layout = init_params(expect, 0);
  if (layout.size() != tensors.size())
    throw FormatError("checkpoint: tensor count " + std::to_string(tensors.size()) +
                      " does not match the target model (" + std::to_string(layout.size()) + ")");
  ParameterStore store;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& [name, tensor] = tensors[i];
    const auto& [want_name, want_tensor] = layout.entries()[i];
    if (name != want_name)
      throw FormatError("checkpoint: tensor name mismatch: " + name + " vs expected " + want_name);
    if (tensor.shape() != want_tensor.shape())
      throw FormatError("checkpoint: shape mismatch for " + name + ": " + shape_str(tensor.shape()) +
                        " vs expected " + shape_str(want_tensor.shape()));
    store.add(name, tensor.clone());
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.config.width));
  w.u32(static_cast<std::uint32_t>(ckpt.config.cascade_depth));
  w.u32(static_cast<std::uint32_t>(ckpt.config.ast_depth));
  w.u32(static_cast<std::uint32_t>(ckpt.config.heads));
  w.f32(static_cast<float>(ckpt.config.attn_eps));
  w.f32(static_cast<float>(ckpt.config.gate_scale_init));
  w.f32(static_cast<float>(ckpt.config.fuse_weight_init));
  w.f32(static_cast<float>(ckpt.config.temperature_init));
  w.u64(static_cast<std::uint64_t>(ckpt.step));
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::int64_t e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    w.payload(t);
  }
  w.u8(ckpt.has_optimizer ? 1 : 0);
  if (ckpt.has_optimizer) {
    w.u64(static_cast<std::uint64_t>(ckpt.optim.step));
    for (const auto& [name, t] : ckpt.tensors) {
      const auto it = ckpt.optim.moments.find(name);
      if (it == ckpt.optim.moments.end())
        throw FormatError("checkpoint: optimizer moments missing for " + name);
      for (real v : it->second.m) w.f32(static_cast<float>(v));
      for (real v : it->second.v) w.f32(static_cast<float>(v));
    }
  }
  w.u64(fnv1a(w.bytes, w.bytes.size()));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + " failed: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  in.close();

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint " + path.string() + ": bad magic");
  if (bytes.size() < 4 + 4 + 8)
    throw FormatError("checkpoint " + path.string() + ": truncated header");

  const std::uint64_t stored = [&] {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }();
  if (fnv1a(bytes, bytes.size() - 8) != stored)
    throw FormatError("checkpoint " + path.string() + ": checksum mismatch");

  Reader r{bytes, 4, bytes.size() - 8, path.string()};
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("checkpoint " + path.string() + ": unsupported version " +
                      std::to_string(version));

  Checkpoint c;
  c.config.width = static_cast<int>(r.u32());
  c.config.cascade_depth = static_cast<int>(r.u32());
  c.config.ast_depth = static_cast<int>(r.u32());
  c.config.heads = static_cast<int>(r.u32());
  c.config.attn_eps = static_cast<real>(r.f32());
  c.config.gate_scale_init = static_cast<real>(r.f32());
  c.config.fuse_weight_init = static_cast<real>(r.f32());
  c.config.temperature_init = static_cast<real>(r.f32());
  c.step = static_cast<std::int64_t>(r.u64());
  const std::uint32_t tensor_count = r.u32();
  c.tensors.reserve(tensor_count);
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint " + path.string() + ": implausible rank for " + name);
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<std::int64_t>(r.u32());
    const std::int64_t numel = shape_numel(shape);
    std::vector<real> values(static_cast<std::size_t>(numel));
    for (auto& v : values) v = static_cast<real>(r.f32());
    c.tensors.emplace_back(name, Tensor::from_values(shape, std::move(values)));
  }
  c.has_optimizer = r.u8() != 0;
  if (c.has_optimizer) {
    c.optim.step = static_cast<std::int64_t>(r.u64());
    for (const auto& [name, t] : c.tensors) {
      OptimState::Moments mom;
      mom.m.resize(static_cast<std::size_t>(t.numel()));
      mom.v.resize(static_cast<std::size_t>(t.numel()));
      for (auto& v : mom.m) v = static_cast<real>(r.f32());
      for (auto& v : mom.v) v = static_cast<real>(r.f32());
      c.optim.moments.emplace(name, std::move(mom));
    }
  }
  if (r.pos != r.limit)
    throw FormatError("checkpoint " + path.string() + ": trailing bytes after payload");
  return c;
}

}  // namespace ssdnet
