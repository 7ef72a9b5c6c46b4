#include <catch2/catch_amalgamated.hpp>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "screenprune/datagen.hpp"
#include "screenprune/dataset.hpp"

using namespace screenprune;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("screenprune-test-" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void gzip_file(const std::string& src, const std::string& dst) {
  const auto bytes = read_bytes(src);
  gzFile out = gzopen(dst.c_str(), "wb");
  REQUIRE(out != nullptr);
  REQUIRE(gzwrite(out, bytes.data(), unsigned(bytes.size())) == int(bytes.size()));
  gzclose(out);
}

}  // namespace

TEST_CASE("IDX round trip through writer and loader") {
  TempDir dir;
  std::vector<std::vector<std::uint8_t>> images(3, std::vector<std::uint8_t>(28 * 28, 0));
  images[0][0] = 255;   // top-left pixel lit
  images[1][100] = 51;  // 0.2 of full scale
  std::vector<std::uint8_t> labels = {7, 0, 9};
  write_idx_images(dir.file("imgs"), images, 28, 28);
  write_idx_labels(dir.file("labels"), labels);

  Dataset ds = load_mnist_idx(dir.file("imgs"), dir.file("labels"));
  REQUIRE(ds.size() == 3);
  REQUIRE(ds.images.shape() == std::vector<std::size_t>{3, 1, 28, 28});
  REQUIRE(ds.labels == std::vector<int>{7, 0, 9});
  // normalization: (v/255 - 0.1307) / 0.3081
  REQUIRE(double(ds.images[0]) == Catch::Approx((1.0 - 0.1307) / 0.3081).epsilon(1e-5));
  REQUIRE(double(ds.images[28 * 28 + 100]) ==
          Catch::Approx((51.0 / 255.0 - 0.1307) / 0.3081).epsilon(1e-5));
  REQUIRE(double(ds.images[1]) == Catch::Approx((0.0 - 0.1307) / 0.3081).epsilon(1e-5));
}

TEST_CASE("IDX loader accepts gzip-wrapped files") {
  TempDir dir;
  std::vector<std::vector<std::uint8_t>> images(2, std::vector<std::uint8_t>(4, 128));
  write_idx_images(dir.file("imgs"), images, 2, 2);
  write_idx_labels(dir.file("labels"), {1, 2});
  gzip_file(dir.file("imgs"), dir.file("imgs.gz"));
  gzip_file(dir.file("labels"), dir.file("labels.gz"));
  Dataset plain = load_mnist_idx(dir.file("imgs"), dir.file("labels"));
  Dataset zipped = load_mnist_idx(dir.file("imgs.gz"), dir.file("labels.gz"));
  REQUIRE(plain.images == zipped.images);
  REQUIRE(plain.labels == zipped.labels);
}

TEST_CASE("IDX loader rejects malformed files") {
  TempDir dir;
  std::vector<std::vector<std::uint8_t>> images(2, std::vector<std::uint8_t>(4, 0));
  write_idx_images(dir.file("imgs"), images, 2, 2);
  write_idx_labels(dir.file("labels"), {1, 2});

  SECTION("bad magic") {
    auto bytes = read_bytes(dir.file("imgs"));
    bytes[3] = 0x99;
    write_bytes(dir.file("bad"), bytes);
    REQUIRE_THROWS_AS(load_mnist_idx(dir.file("bad"), dir.file("labels")), FormatError);
  }
  SECTION("truncated image data") {
    auto bytes = read_bytes(dir.file("imgs"));
    bytes.resize(bytes.size() - 3);
    write_bytes(dir.file("short"), bytes);
    REQUIRE_THROWS_AS(load_mnist_idx(dir.file("short"), dir.file("labels")), FormatError);
  }
  SECTION("image/label count mismatch") {
    write_idx_labels(dir.file("labels3"), {1, 2, 3});
    REQUIRE_THROWS_AS(load_mnist_idx(dir.file("imgs"), dir.file("labels3")), FormatError);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_mnist_idx(dir.file("nope"), dir.file("labels")), FormatError);
  }
}

TEST_CASE("CIFAR-10 binary loader") {
  TempDir dir;
  std::vector<std::array<std::uint8_t, 3073>> records(2);
  records[0][0] = 9;
  records[0][1] = 255;            // R plane, first pixel
  records[0][1 + 1024] = 128;     // G plane
  records[1][0] = 3;
  write_cifar_batch(dir.file("b1.bin"), records);

  Dataset ds = load_cifar10({dir.file("b1.bin")});
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.images.shape() == std::vector<std::size_t>{2, 3, 32, 32});
  REQUIRE(ds.labels == std::vector<int>{9, 3});
  REQUIRE(double(ds.images[0]) == Catch::Approx((1.0 - 0.4914) / 0.2470).epsilon(1e-5));
  REQUIRE(double(ds.images[1024]) ==
          Catch::Approx((128.0 / 255.0 - 0.4822) / 0.2435).epsilon(1e-5));

  SECTION("single-record file yields one sample") {
    write_cifar_batch(dir.file("one.bin"), {records[0]});
    REQUIRE(load_cifar10({dir.file("one.bin")}).size() == 1);
  }
  SECTION("multiple batch files concatenate") {
    write_cifar_batch(dir.file("b2.bin"), records);
    REQUIRE(load_cifar10({dir.file("b1.bin"), dir.file("b2.bin")}).size() == 4);
  }
  SECTION("bad record size is rejected") {
    auto bytes = read_bytes(dir.file("b1.bin"));
    bytes.push_back(0);
    write_bytes(dir.file("bad.bin"), bytes);
    REQUIRE_THROWS_AS(load_cifar10({dir.file("bad.bin")}), FormatError);
  }
}

TEST_CASE("loader output is bit-stable across runs") {
  TempDir dir;
  std::vector<std::vector<std::uint8_t>> images;
  std::vector<std::uint8_t> labels;
  generate_synth_digits(50, 123, images, labels);
  write_idx_images(dir.file("imgs"), images, 28, 28);
  write_idx_labels(dir.file("labels"), labels);
  Dataset a = load_mnist_idx(dir.file("imgs"), dir.file("labels"));
  Dataset b = load_mnist_idx(dir.file("imgs"), dir.file("labels"));
  REQUIRE(a.images == b.images);
  REQUIRE(a.labels == b.labels);
}

TEST_CASE("batches cover every sample exactly once, short batch included") {
  Dataset ds;
  ds.images = Tensor({10, 1, 2, 2});
  ds.labels.resize(10);
  for (std::size_t i = 0; i < 10; ++i) {
    ds.labels[i] = int(i);
    ds.images[i * 4] = float(i);
  }

  BatchIterator it(ds, 4, 42, 0);
  std::vector<std::size_t> sizes;
  std::multiset<int> seen;
  while (auto b = it.next()) {
    sizes.push_back(b->labels.size());
    for (int y : b->labels) seen.insert(y);
    for (std::size_t i = 0; i < b->labels.size(); ++i)
      REQUIRE(b->images[i * 4] == float(b->labels[i]));  // image rows follow their labels
  }
  REQUIRE(sizes == std::vector<std::size_t>{4, 4, 2});
  REQUIRE(seen == std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("batch order is a pure function of seed and epoch") {
  Dataset ds;
  ds.images = Tensor({64, 1, 1, 1});
  ds.labels.resize(64);
  for (std::size_t i = 0; i < 64; ++i) ds.labels[i] = int(i);

  auto order_of = [&](std::uint64_t seed, std::size_t epoch) {
    BatchIterator it(ds, 16, seed, epoch);
    std::vector<int> order;
    while (auto b = it.next()) order.insert(order.end(), b->labels.begin(), b->labels.end());
    return order;
  };
  REQUIRE(order_of(7, 3) == order_of(7, 3));
  REQUIRE(order_of(7, 3) != order_of(7, 4));
  REQUIRE(order_of(7, 3) != order_of(8, 3));
}

TEST_CASE("augmentation: identity mode, determinism, flip rate, geometry") {
  Rng rng(81);
  Tensor batch({100, 1, 32, 32});
  for (std::size_t i = 0; i < batch.size(); ++i)
    batch[i] = static_cast<float>(rng.uniform(0.1, 1.0));  // strictly positive interior

  REQUIRE(augment(batch, AugmentMode::none, 5) == batch);
  REQUIRE(augment(batch, AugmentMode::flip_crop, 5) == augment(batch, AugmentMode::flip_crop, 5));
  Tensor shifted = augment(batch, AugmentMode::flip_crop, 5);
  REQUIRE(shifted.shape() == batch.shape());

  // every output pixel is either zero padding or a source pixel
  std::set<float> source(batch.data(), batch.data() + batch.size());
  for (std::size_t i = 0; i < shifted.size(); ++i)
    REQUIRE((shifted[i] == 0.0f || source.count(shifted[i]) == 1));

  // flip rate over many samples: every row of the probe increases with x,
  // so a flipped sample shows decreasing values among its visible pixels
  Tensor probe({10000, 1, 8, 8});
  for (std::size_t s = 0; s < 10000; ++s)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) probe[s * 64 + y * 8 + x] = float(1 + x);
  Tensor out = augment(probe, AugmentMode::flip_crop, 99);
  std::size_t flipped = 0, decided = 0;
  for (std::size_t s = 0; s < 10000; ++s) {
    for (std::size_t y = 0; y < 8; ++y) {
      std::vector<float> visible;
      for (std::size_t x = 0; x < 8; ++x) {
        const float v = out[s * 64 + y * 8 + x];
        if (v != 0.0f) visible.push_back(v);
      }
      if (visible.size() < 2) continue;
      ++decided;
      if (visible[0] > visible[1]) ++flipped;
      break;
    }
  }
  REQUIRE(decided > 9000);  // crops of +-4 never hide most of an 8x8 frame
  const double rate = double(flipped) / double(decided);
  REQUIRE(rate > 0.45);
  REQUIRE(rate < 0.55);
}

TEST_CASE("subset keeps the leading samples") {
  Dataset ds;
  ds.images = Tensor({5, 1, 1, 1}, {0, 1, 2, 3, 4});
  ds.labels = {0, 1, 2, 3, 4};
  Dataset s = subset(ds, 3);
  REQUIRE(s.size() == 3);
  REQUIRE(s.labels == std::vector<int>{0, 1, 2});
  REQUIRE(s.images[2] == 2.0f);
  REQUIRE(subset(ds, 99).size() == 5);
}

TEST_CASE("synthetic digit generator is deterministic and label-consistent") {
  std::vector<std::vector<std::uint8_t>> a, b;
  std::vector<std::uint8_t> la, lb;
  generate_synth_digits(20, 7, a, la);
  generate_synth_digits(20, 7, b, lb);
  REQUIRE(a == b);
  REQUIRE(la == lb);
  for (auto y : la) REQUIRE(y < 10);
}
