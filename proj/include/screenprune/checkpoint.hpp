#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "screenprune/network.hpp"
#include "screenprune/optimizer.hpp"

namespace screenprune {

// Checkpoint container, format version 1. Little-endian throughout:
//   magic "SPNC", u32 version, u64 config digest, u32 epoch, u8 has_velocity,
//   u32 layer count, per-layer type tag + descriptor,
//   u32 tensor count, then named tensors (u16 name length, name bytes,
//   u32 rank, u64 dims, raw float32 data).
// Floats are stored bit-exactly, so load(save(x)) reproduces x bitwise.

struct Checkpoint {
  Network net;
  SgdState velocity;
  bool has_velocity = false;
  std::uint32_t epoch = 0;
  std::uint64_t config_digest = 0;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

constexpr std::uint32_t kVersion = 1;

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::uint8_t* p;
  const std::uint8_t* end;
  void need(std::size_t n) const {
    if (std::size_t(end - p) < n) throw CheckpointError("checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return *p++;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
    p += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    p += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    return s;
  }
};

inline void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
  put_u16(out, std::uint16_t(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, std::uint32_t(t.rank()));
  for (std::size_t d = 0; d < t.rank(); ++d) put_u64(out, t.dim(d));
  for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

inline std::pair<std::string, Tensor> read_tensor(Reader& r) {
  const std::size_t name_len = r.u16();
  std::string name = r.str(name_len);
  const std::size_t rank = r.u32();
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = r.u64();
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f32();
  return {std::move(name), std::move(t)};
}

inline std::vector<std::pair<std::string, Tensor*>> named_layer_tensors(Layer& layer,
                                                                        std::size_t index) {
  const std::string prefix = "layer" + std::to_string(index) + ".";
  std::vector<std::pair<std::string, Tensor*>> out;
  if (auto* d = std::get_if<DenseLayer>(&layer)) {
    out = {{prefix + "weights", &d->weights},
           {prefix + "bias", &d->bias},
           {prefix + "weight_mask", &d->weight_mask}};
  } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
    out = {{prefix + "kernels", &c->kernels},
           {prefix + "bias", &c->bias},
           {prefix + "out_channel_mask", &c->out_channel_mask},
           {prefix + "in_channel_mask", &c->in_channel_mask}};
  } else if (auto* bn = std::get_if<BatchNorm2dLayer>(&layer)) {
    out = {{prefix + "gamma", &bn->gamma},
           {prefix + "beta", &bn->beta},
           {prefix + "running_mean", &bn->running_mean},
           {prefix + "running_var", &bn->running_var},
           {prefix + "channel_mask", &bn->channel_mask}};
  }
  return out;
}

}  // namespace ckpt_detail

inline void checkpoint_save(const std::string& path, const Network& net_in,
                            const SgdState* velocity, std::uint32_t epoch,
                            std::uint64_t config_digest) {
  using namespace ckpt_detail;
  Network& net = const_cast<Network&>(net_in);  // named_layer_tensors wants mutable access
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'S', 'P', 'N', 'C'});
  put_u32(out, kVersion);
  put_u64(out, config_digest);
  put_u32(out, epoch);
  put_u8(out, velocity && !velocity->velocity.empty() ? 1 : 0);
  put_u32(out, std::uint32_t(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    put_u8(out, std::uint8_t(layer.index()));
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      put_u64(out, d->in_features);
      put_u64(out, d->out_features);
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      put_u64(out, c->in_channels);
      put_u64(out, c->out_channels);
      put_u64(out, c->kernel_h);
      put_u64(out, c->kernel_w);
      put_u64(out, c->stride);
      put_u64(out, c->padding);
    } else if (const auto* bn = std::get_if<BatchNorm2dLayer>(&layer)) {
      put_u64(out, bn->channels);
      put_f32(out, bn->epsilon);
      put_f32(out, bn->momentum);
    } else if (const auto* mp = std::get_if<MaxPool2dLayer>(&layer)) {
      put_u64(out, mp->window);
      put_u64(out, mp->stride);
    }
  }
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (std::size_t i = 0; i < net.layer_count(); ++i)
    for (auto& [name, t] : named_layer_tensors(net.layer(i), i)) tensors.emplace_back(name, t);
  std::vector<std::pair<std::string, Tensor>> vel_tensors;
  if (velocity && !velocity->velocity.empty()) {
    for (std::size_t li = 0; li < velocity->velocity.size(); ++li)
      for (std::size_t slot = 0; slot < velocity->velocity[li].size(); ++slot)
        vel_tensors.emplace_back(
            "velocity.layer" + std::to_string(li) + ".slot" + std::to_string(slot),
            velocity->velocity[li][slot]);
    for (auto& [name, t] : vel_tensors) tensors.emplace_back(name, &t);
  }
  put_u32(out, std::uint32_t(tensors.size()));
  for (auto& [name, t] : tensors) put_tensor(out, name, *t);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError("cannot write checkpoint: " + path);
  file.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  if (!file) throw CheckpointError("short write: " + path);
}

inline Checkpoint checkpoint_load(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CheckpointError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  Reader r{bytes.data(), bytes.data() + bytes.size()};
  r.need(4);
  if (std::memcmp(r.p, "SPNC", 4) != 0) throw CheckpointError("not a checkpoint file: " + path);
  r.p += 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kVersion) + ")");
  Checkpoint cp;
  cp.config_digest = r.u64();
  cp.epoch = r.u32();
  cp.has_velocity = r.u8() != 0;
  const std::size_t layer_count = r.u32();
  for (std::size_t i = 0; i < layer_count; ++i) {
    const std::uint8_t tag = r.u8();
    switch (tag) {
      case 0: {
        const std::size_t in = r.u64(), out_f = r.u64();
        cp.net.add(DenseLayer(in, out_f));
        break;
      }
      case 1: {
        const std::size_t in = r.u64(), out_c = r.u64(), kh = r.u64(), kw = r.u64();
        const std::size_t stride = r.u64(), padding = r.u64();
        cp.net.add(Conv2dLayer(in, out_c, kh, kw, stride, padding));
        break;
      }
      case 2: {
        BatchNorm2dLayer bn(r.u64());
        bn.epsilon = r.f32();
        bn.momentum = r.f32();
        cp.net.add(std::move(bn));
        break;
      }
      case 3:
        cp.net.add(ReluLayer{});
        break;
      case 4: {
        const std::size_t window = r.u64(), stride = r.u64();
        cp.net.add(MaxPool2dLayer(window, stride));
        break;
      }
      case 5:
        cp.net.add(FlattenLayer{});
        break;
      default:
        throw CheckpointError("unknown layer tag in checkpoint");
    }
  }
  if (cp.has_velocity) cp.velocity.velocity.resize(layer_count);
  const std::size_t tensor_count = r.u32();
  for (std::size_t t = 0; t < tensor_count; ++t) {
    auto [name, tensor] = read_tensor(r);
    if (name.rfind("velocity.", 0) == 0) {
      std::size_t li = 0, slot = 0;
      if (std::sscanf(name.c_str(), "velocity.layer%zu.slot%zu", &li, &slot) != 2 ||
          li >= layer_count)
        throw CheckpointError("malformed velocity tensor name: " + name);
      auto& vl = cp.velocity.velocity[li];
      if (vl.size() <= slot) vl.resize(slot + 1);
      vl[slot] = std::move(tensor);
      continue;
    }
    bool placed = false;
    for (std::size_t i = 0; i < layer_count && !placed; ++i) {
      for (auto& [tname, dst] : named_layer_tensors(cp.net.layer(i), i)) {
        if (tname != name) continue;
        if (!dst->same_shape(tensor))
          throw CheckpointError("tensor shape mismatch for " + name);
        *dst = std::move(tensor);
        placed = true;
        break;
      }
    }
    if (!placed) throw CheckpointError("unexpected tensor in checkpoint: " + name);
  }
  if (r.p != r.end) throw CheckpointError("trailing bytes in checkpoint: " + path);
  return cp;
}

}  // namespace screenprune
