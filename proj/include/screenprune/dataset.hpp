#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "screenprune/rng.hpp"
#include "screenprune/tensor.hpp"

namespace screenprune {

struct Dataset {
  Tensor images;  // [N x ch x h x w]
  std::vector<int> labels;
  std::string split = "train";
  std::size_t class_count = 10;

  std::size_t size() const { return labels.size(); }
  std::size_t channels() const { return images.dim(1); }
  std::size_t height() const { return images.dim(2); }
  std::size_t width() const { return images.dim(3); }
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                        const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw FormatError("zlib init failed: " + path);
  std::vector<std::uint8_t> out;
  out.resize(std::max<std::size_t>(in.size() * 4, 1 << 16));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt gzip stream: " + path);
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

/// Reads a file, transparently unwrapping gzip (.gz distribution files).
inline std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path);
  return bytes;
}

inline std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

}  // namespace detail

/// Pixel normalization: value/255, then (x - mean[c]) / std[c] per channel.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization mnist() { return {{0.1307}, {0.3081}}; }
  static Normalization cifar10() { return {{0.4914, 0.4822, 0.4465}, {0.2470, 0.2435, 0.2616}}; }
  static Normalization none(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
  }
};

/// Parses the IDX image/label pair (big-endian; magics 0x803 and 0x801).
inline Dataset load_mnist_idx(const std::string& image_path, const std::string& label_path,
                              const Normalization& norm = Normalization::mnist()) {
  const auto img = detail::read_maybe_gz(image_path);
  const auto lab = detail::read_maybe_gz(label_path);
  if (img.size() < 16 || detail::be32(img.data()) != 0x00000803)
    throw FormatError("bad IDX image magic: " + image_path);
  if (lab.size() < 8 || detail::be32(lab.data()) != 0x00000801)
    throw FormatError("bad IDX label magic: " + label_path);
  const std::size_t n = detail::be32(img.data() + 4);
  const std::size_t rows = detail::be32(img.data() + 8);
  const std::size_t cols = detail::be32(img.data() + 12);
  const std::size_t n_labels = detail::be32(lab.data() + 4);
  if (n != n_labels)
    throw FormatError("IDX image/label count mismatch: " + std::to_string(n) + " vs " +
                      std::to_string(n_labels));
  if (img.size() != 16 + n * rows * cols) throw FormatError("truncated IDX image file");
  if (lab.size() != 8 + n) throw FormatError("truncated IDX label file");
  if (norm.mean.size() != 1 || norm.stddev.size() != 1)
    throw FormatError("IDX loader expects single-channel normalization");

  Dataset ds;
  ds.images = Tensor({n, 1, rows, cols});
  ds.labels.resize(n);
  const double mean = norm.mean[0], stddev = norm.stddev[0];
  for (std::size_t i = 0; i < n * rows * cols; ++i)
    ds.images[i] = static_cast<float>((double(img[16 + i]) / 255.0 - mean) / stddev);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    if (ds.labels[i] > 9) throw FormatError("IDX label out of range");
  }
  return ds;
}

/// Parses CIFAR-10 binary batches: 3073-byte records, label byte followed by
/// 3072 channel-planar pixels (R, G, B).
inline Dataset load_cifar10(const std::vector<std::string>& batch_paths,
                            const Normalization& norm = Normalization::cifar10()) {
  constexpr std::size_t record = 3073;
  constexpr std::size_t side = 32, plane = side * side;
  std::vector<std::uint8_t> all;
  for (const auto& path : batch_paths) {
    auto bytes = detail::read_maybe_gz(path);
    if (bytes.empty() || bytes.size() % record != 0)
      throw FormatError("CIFAR-10 file length not a multiple of 3073: " + path);
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  const std::size_t n = all.size() / record;
  if (norm.mean.size() != 3 || norm.stddev.size() != 3)
    throw FormatError("CIFAR loader expects 3-channel normalization");
  Dataset ds;
  ds.images = Tensor({n, 3, side, side});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = all.data() + i * record;
    if (rec[0] > 9) throw FormatError("CIFAR-10 label out of range");
    ds.labels[i] = rec[0];
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < plane; ++p)
        ds.images[(i * 3 + c) * plane + p] = static_cast<float>(
            (double(rec[1 + c * plane + p]) / 255.0 - norm.mean[c]) / norm.stddev[c]);
  }
  return ds;
}

/// Keeps the first n samples (deterministic subset for reduced-scale runs).
inline Dataset subset(const Dataset& ds, std::size_t n) {
  if (n >= ds.size()) return ds;
  Dataset out;
  out.split = ds.split;
  out.class_count = ds.class_count;
  const std::size_t stride = ds.channels() * ds.height() * ds.width();
  out.images = Tensor({n, ds.channels(), ds.height(), ds.width()});
  std::copy(ds.images.data(), ds.images.data() + n * stride, out.images.data());
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
  return out;
}

enum class AugmentMode { none, flip_crop };

/// Per-sample horizontal flip (p = 0.5) and random crop out of 4-pixel
/// zero padding. Deterministic under the seed.
inline Tensor augment(const Tensor& batch, AugmentMode mode, std::uint64_t seed) {
  if (mode == AugmentMode::none) return batch;
  if (batch.rank() != 4) throw std::invalid_argument("augment: batch must be 4-d");
  constexpr std::size_t pad = 4;
  const std::size_t k = batch.dim(0), ch = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Tensor out({k, ch, h, w});
  Rng rng(seed);
  for (std::size_t s = 0; s < k; ++s) {
    const bool flip = rng.bernoulli(0.5);
    const std::size_t oy = rng.uniform_index(2 * pad + 1);
    const std::size_t ox = rng.uniform_index(2 * pad + 1);
    for (std::size_t c = 0; c < ch; ++c) {
      const float* src = batch.data() + (s * ch + c) * h * w;
      float* dst = out.data() + (s * ch + c) * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          // position in the padded source frame
          const std::int64_t sy = std::int64_t(y + oy) - std::int64_t(pad);
          std::int64_t sx = std::int64_t(x + ox) - std::int64_t(pad);
          if (flip && sx >= 0 && sx < std::int64_t(w)) sx = std::int64_t(w) - 1 - sx;
          float v = 0.0f;
          if (sy >= 0 && sy < std::int64_t(h) && sx >= 0 && sx < std::int64_t(w))
            v = src[sy * w + sx];
          dst[y * w + x] = v;
        }
      }
    }
  }
  return out;
}

struct Batch {
  Tensor images;
  std::vector<int> labels;
  std::size_t first_index = 0;  // position in the epoch's permuted order
};

/// Shuffled mini-batches covering every sample exactly once per epoch.
/// The permutation depends only on (seed, epoch); the final short batch
/// is included.
class BatchIterator {
public:
  BatchIterator(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::size_t epoch,
                bool shuffle = true)
      : ds_(&ds), batch_size_(batch_size) {
    if (batch_size == 0) throw std::invalid_argument("BatchIterator: batch size must be >= 1");
    order_.resize(ds.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle) {
      Rng rng = Rng(seed).fork(epoch);
      rng.shuffle(order_);
    }
  }

  std::size_t batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

  std::optional<Batch> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t len = std::min(batch_size_, order_.size() - cursor_);
    Batch batch;
    batch.first_index = cursor_;
    const std::size_t stride = ds_->channels() * ds_->height() * ds_->width();
    batch.images = Tensor({len, ds_->channels(), ds_->height(), ds_->width()});
    batch.labels.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t src = order_[cursor_ + i];
      std::memcpy(batch.images.data() + i * stride, ds_->images.data() + src * stride,
                  stride * sizeof(float));
      batch.labels[i] = ds_->labels[src];
    }
    cursor_ += len;
    return batch;
  }

private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace screenprune
