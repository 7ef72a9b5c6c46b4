#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "screenprune/rng.hpp"

namespace screenprune {

// Writers for the exact on-disk formats the loaders parse, plus generators
// for learnable stand-in datasets. The stand-ins let every pipeline run
// end-to-end through the real file formats on machines without the
// benchmark datasets.

namespace detail {

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8),
                             std::uint8_t(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

inline void write_idx_images(const std::string& path,
                             const std::vector<std::vector<std::uint8_t>>& images,
                             std::size_t rows, std::size_t cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  detail::write_be32(out, 0x00000803);
  detail::write_be32(out, static_cast<std::uint32_t>(images.size()));
  detail::write_be32(out, static_cast<std::uint32_t>(rows));
  detail::write_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    if (img.size() != rows * cols) throw std::runtime_error("image size mismatch");
    out.write(reinterpret_cast<const char*>(img.data()), std::streamsize(img.size()));
  }
}

inline void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  detail::write_be32(out, 0x00000801);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
}

inline void write_cifar_batch(const std::string& path,
                              const std::vector<std::array<std::uint8_t, 3073>>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& rec : records)
    out.write(reinterpret_cast<const char*>(rec.data()), 3073);
}

namespace detail {

// 5x7 digit glyphs, one row byte per glyph row (low 5 bits used).
inline const std::array<std::array<std::uint8_t, 7>, 10>& digit_glyphs() {
  static const std::array<std::array<std::uint8_t, 7>, 10> glyphs = {{
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
      {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
      {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
      {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
      {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
      {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
  }};
  return glyphs;
}

}  // namespace detail

/// 28x28 grayscale digit glyphs with random scale and placement, intensity
/// jitter, distractor strokes and heavy pixel noise. Ten classes, hard
/// enough that a LeNet-style model lands at a few percent error rather
/// than saturating immediately.
inline void generate_synth_digits(std::size_t count, std::uint64_t seed,
                                  std::vector<std::vector<std::uint8_t>>& images,
                                  std::vector<std::uint8_t>& labels) {
  Rng rng(seed);
  images.assign(count, std::vector<std::uint8_t>(28 * 28, 0));
  labels.assign(count, 0);
  const auto& glyphs = detail::digit_glyphs();
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(rng.uniform_index(10));
    labels[i] = static_cast<std::uint8_t>(digit);
    auto& img = images[i];
    const int scale = 2 + static_cast<int>(rng.uniform_index(2));  // 2 or 3
    const int gw = 5 * scale, gh = 7 * scale;
    const int ox = static_cast<int>(rng.uniform_index(28 - gw + 1));
    const int oy = static_cast<int>(rng.uniform_index(28 - gh + 1));
    const double intensity = rng.uniform(0.55, 1.0);
    for (int gy = 0; gy < 7; ++gy)
      for (int gx = 0; gx < 5; ++gx) {
        if (!((glyphs[digit][gy] >> (4 - gx)) & 1)) continue;
        for (int sy = 0; sy < scale; ++sy)
          for (int sx = 0; sx < scale; ++sx) {
            const int y = oy + gy * scale + sy, x = ox + gx * scale + sx;
            img[y * 28 + x] = static_cast<std::uint8_t>(255.0 * intensity);
          }
      }
    // a distractor stroke
    for (int stroke = 0; stroke < 1; ++stroke) {
      const bool horizontal = rng.bernoulli(0.5);
      const int len = 3 + static_cast<int>(rng.uniform_index(6));
      const int sx = static_cast<int>(rng.uniform_index(28 - (horizontal ? len : 1)));
      const int sy = static_cast<int>(rng.uniform_index(28 - (horizontal ? 1 : len)));
      const double sv = 255.0 * rng.uniform(0.3, 0.9);
      for (int t = 0; t < len; ++t) {
        const int y = horizontal ? sy : sy + t, x = horizontal ? sx + t : sx;
        img[y * 28 + x] = static_cast<std::uint8_t>(sv);
      }
    }
    for (auto& px : img) {
      const double noisy = double(px) + 32.0 * rng.normal();
      px = static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, noisy)));
    }
  }
}

/// 32x32 RGB stand-in with ten classes defined by colored block patterns on
/// a noisy background; learnable by a small conv net.
inline void generate_synth_rgb(std::size_t count, std::uint64_t seed,
                               std::vector<std::array<std::uint8_t, 3073>>& records) {
  Rng rng(seed);
  records.assign(count, {});
  constexpr std::size_t side = 32, plane = side * side;
  // per-class palette (two colors per class)
  const std::uint8_t palette[10][2][3] = {
      {{220, 40, 40}, {40, 40, 220}},   {{40, 220, 40}, {220, 220, 40}},
      {{220, 40, 220}, {40, 220, 220}}, {{240, 130, 20}, {20, 130, 240}},
      {{150, 80, 220}, {220, 150, 80}}, {{90, 200, 150}, {200, 90, 150}},
      {{250, 250, 250}, {60, 60, 60}},  {{180, 220, 40}, {40, 100, 180}},
      {{220, 100, 100}, {100, 220, 180}}, {{130, 130, 240}, {240, 200, 130}},
  };
  for (std::size_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(rng.uniform_index(10));
    auto& rec = records[i];
    rec[0] = static_cast<std::uint8_t>(cls);
    // noisy gray background
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < plane; ++p)
        rec[1 + c * plane + p] =
            static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, 110.0 + 26.0 * rng.normal())));
    // two class-colored blocks at class-dependent quadrants, with jitter
    for (int blob = 0; blob < 2; ++blob) {
      const int qx = ((cls + blob) % 2) ? 17 : 3;
      const int qy = ((cls / 2 + blob) % 2) ? 17 : 3;
      const int bx = qx + static_cast<int>(rng.uniform_index(4));
      const int by = qy + static_cast<int>(rng.uniform_index(4));
      const int bs = 8 + static_cast<int>(rng.uniform_index(3));
      for (int y = by; y < std::min<int>(by + bs, side); ++y)
        for (int x = bx; x < std::min<int>(bx + bs, side); ++x)
          for (std::size_t c = 0; c < 3; ++c) {
            const double v = double(palette[cls][blob][c]) + 12.0 * rng.normal();
            rec[1 + c * plane + y * side + x] =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, v)));
          }
    }
  }
}

/// Writes a synthetic digit dataset as IDX train/test files under dir.
inline void write_synth_digit_dataset(const std::string& dir, std::size_t train_count,
                                      std::size_t test_count, std::uint64_t seed) {
  std::vector<std::vector<std::uint8_t>> images;
  std::vector<std::uint8_t> labels;
  generate_synth_digits(train_count, seed, images, labels);
  write_idx_images(dir + "/train-images-idx3-ubyte", images, 28, 28);
  write_idx_labels(dir + "/train-labels-idx1-ubyte", labels);
  generate_synth_digits(test_count, seed + 1, images, labels);
  write_idx_images(dir + "/t10k-images-idx3-ubyte", images, 28, 28);
  write_idx_labels(dir + "/t10k-labels-idx1-ubyte", labels);
}

/// Writes a synthetic RGB dataset as CIFAR-10 style binary batches under dir.
inline void write_synth_rgb_dataset(const std::string& dir, std::size_t train_count,
                                    std::size_t test_count, std::uint64_t seed) {
  std::vector<std::array<std::uint8_t, 3073>> records;
  generate_synth_rgb(train_count, seed, records);
  write_cifar_batch(dir + "/data_batch_1.bin", records);
  generate_synth_rgb(test_count, seed + 1, records);
  write_cifar_batch(dir + "/test_batch.bin", records);
}

}  // namespace screenprune
