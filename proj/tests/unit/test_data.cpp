#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dcal/data.hpp"
#include "dcal/errors.hpp"
#include "dcal/svm.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace data = dcal::data;
namespace fs = std::filesystem;
using dcal::ConfigError;
using dcal::DataError;
using dcal::Tensor4;

TEST_CASE("data: pixel normalization endpoints and exhaustive round trip") {
  CHECK(data::normalize_pixel(0.0) == doctest::Approx(-1.0));
  CHECK(data::normalize_pixel(127.5) == doctest::Approx(0.0));
  CHECK(data::normalize_pixel(255.0) == doctest::Approx(1.0));
  for (int v = 0; v <= 255; ++v) {
    CHECK(data::denormalize_pixel(data::normalize_pixel(v)) == v);
  }
  CHECK_THROWS_AS(data::normalize_pixel(-1.0), DataError);
  CHECK_THROWS_AS(data::normalize_pixel(256.0), DataError);
}

TEST_CASE("data: synthetic generation is deterministic and well-formed") {
  auto spec = data::SynthSpec::defaults(64, 6, 42);
  auto a = data::generate_synthetic(spec);
  auto b = data::generate_synthetic(spec);

  CHECK(a.image_size == 64);
  REQUIRE(a.images.size() == 12);
  int pos = 0, neg = 0;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const auto& img = a.images[i];
    CHECK(img.pixels.dims == dcal::Dims4{1, 1, 64, 64});
    CHECK(!img.id.empty());
    (img.label == 1 ? pos : neg) += 1;
    for (float v : img.pixels.values) {
      CHECK(v >= -1.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(img.pixels.values == b.images[i].pixels.values);
    CHECK(img.label == b.images[i].label);
  }
  CHECK(pos == 6);
  CHECK(neg == 6);

  auto c = data::generate_synthetic(data::SynthSpec::defaults(64, 6, 43));
  CHECK(a.images[0].pixels.values != c.images[0].pixels.values);
}

TEST_CASE("data: imbalanced overrides and size validation") {
  auto spec = data::SynthSpec::defaults(32, 10, 1);
  spec.n_pos = 3;
  spec.n_neg = 7;
  auto ds = data::generate_synthetic(spec);
  int pos = 0;
  for (const auto& img : ds.images) pos += img.label == 1 ? 1 : 0;
  CHECK(ds.images.size() == 10);
  CHECK(pos == 3);

  auto tiny = data::SynthSpec::defaults(8, 4, 1);
  CHECK_THROWS_AS(data::generate_synthetic(tiny), ConfigError);
}

TEST_CASE("data: the two classes are linearly separable on raw pixels") {
  // The pipeline's end-to-end accuracy bound assumes the synthetic classes
  // are actually learnable; a raw-pixel linear probe pins that down.
  auto ds = data::generate_synthetic(data::SynthSpec::defaults(32, 20, 7));
  const auto n = static_cast<std::int64_t>(ds.images.size());
  const std::int64_t d = 32 * 32;
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(n * d));
  std::vector<int> y;
  for (const auto& img : ds.images) {
    for (float v : img.pixels.values) x.push_back(v);
    y.push_back(img.label);
  }
  auto model = dcal::svm::svm_train(x, n, d, y, {});
  auto pred = dcal::svm::svm_predict(model, x, n, d);
  int correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    correct += pred[i] == y[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(n) >= 0.95);
}

TEST_CASE("data: decimation keeps every factor-th pixel") {
  auto img = testutil::iota_image<float>(4, 4);
  auto half = data::decimate(img, 2);
  CHECK(half.dims == dcal::Dims4{1, 1, 2, 2});
  CHECK(half.values == std::vector<float>{1, 3, 9, 11});
  CHECK(data::decimate(img, 1).values == img.values);

  CHECK_THROWS_AS(data::decimate(img, 3), DataError);
  CHECK_THROWS_AS(data::decimate(img, 0), std::invalid_argument);
}

TEST_CASE("data: PGM write/read round trip") {
  testutil::TempDir tmp("pgm");
  Tensor4<float> img({1, 1, 2, 3});
  img.values = {-1.0f, 0.0f, 1.0f,
                data::normalize_pixel(7), data::normalize_pixel(128),
                data::normalize_pixel(200)};
  const auto path = tmp.file("img.pgm");
  data::write_pgm(path, img);
  auto back = data::read_pgm(path);
  CHECK(back.dims == img.dims);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    CHECK(back.values[i] ==
          data::normalize_pixel(data::denormalize_pixel(img.values[i])));
  }

  CHECK_THROWS_AS(data::write_pgm(path, Tensor4<float>({2, 1, 2, 2})),
                  std::invalid_argument);
  CHECK_THROWS_AS(data::read_pgm(tmp.file("absent.pgm")), DataError);
}

TEST_CASE("data: PGM header parsing tolerates comments, rejects damage") {
  testutil::TempDir tmp("pgm_header");
  {
    std::ofstream os(tmp.file("ok.pgm"), std::ios::binary);
    os << "P5\n# a comment\n2 # inline\n2\n255\n";
    os.write("\x00\x40\x80\xff", 4);
  }
  auto img = data::read_pgm(tmp.file("ok.pgm"));
  CHECK(img.dims == dcal::Dims4{1, 1, 2, 2});
  CHECK(img.values[0] == doctest::Approx(-1.0));
  CHECK(img.values[3] == doctest::Approx(1.0));

  {
    std::ofstream os(tmp.file("p6.pgm"), std::ios::binary);
    os << "P6\n2 2\n255\n";
    os.write("\x00\x40\x80\xff", 4);
  }
  CHECK_THROWS_AS(data::read_pgm(tmp.file("p6.pgm")), DataError);

  {
    std::ofstream os(tmp.file("short.pgm"), std::ios::binary);
    os << "P5\n2 2\n255\n";
    os.write("\x00\x40", 2);
  }
  CHECK_THROWS_AS(data::read_pgm(tmp.file("short.pgm")), DataError);

  {
    std::ofstream os(tmp.file("deep.pgm"), std::ios::binary);
    os << "P5\n2 2\n65535\n";
    os.write("\x00\x40\x80\xff", 4);
  }
  CHECK_THROWS_AS(data::read_pgm(tmp.file("deep.pgm")), DataError);
}

TEST_CASE("data: dataset save/load round trip with quantization") {
  testutil::TempDir tmp("dataset_rt");
  auto ds = data::generate_synthetic(data::SynthSpec::defaults(32, 4, 3));
  const auto dir = tmp.file("ds");
  data::save_dataset(ds, dir);

  CHECK(fs::exists(fs::path(dir) / "manifest.txt"));
  auto back = data::load_dataset(dir);
  CHECK(back.image_size == 32);
  REQUIRE(back.images.size() == ds.images.size());

  // Loader returns images sorted by id within each class; match by id.
  for (const auto& orig : ds.images) {
    auto it = std::find_if(back.images.begin(), back.images.end(),
                           [&](const data::LabeledImage& li) {
                             return li.id == orig.id;
                           });
    REQUIRE(it != back.images.end());
    CHECK(it->label == orig.label);
    for (std::size_t i = 0; i < orig.pixels.values.size(); ++i) {
      // One quantization through the 8-bit file format.
      CHECK(it->pixels.values[i] ==
            data::normalize_pixel(data::denormalize_pixel(orig.pixels.values[i])));
    }
  }
}

TEST_CASE("data: loading decimates exact multiples of the expected size") {
  testutil::TempDir tmp("dataset_dec");
  auto ds = data::generate_synthetic(data::SynthSpec::defaults(64, 2, 5));
  const auto dir = tmp.file("ds");
  data::save_dataset(ds, dir);

  auto half = data::load_dataset(dir, 32);
  CHECK(half.image_size == 32);
  CHECK(half.images[0].pixels.dims == dcal::Dims4{1, 1, 32, 32});

  // 64 is not a multiple of 48: the error names the offending file.
  try {
    data::load_dataset(dir, 48);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(".pgm") != std::string::npos);
  }
}

TEST_CASE("data: loader error paths name the problem") {
  testutil::TempDir tmp("dataset_err");
  CHECK_THROWS_AS(data::load_dataset(tmp.file("nowhere")), DataError);

  // Directory without a manifest.
  fs::create_directories(tmp.file("empty"));
  try {
    data::load_dataset(tmp.file("empty"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("manifest") != std::string::npos);
  }

  // Manifest naming a class directory that does not exist.
  fs::create_directories(tmp.file("nodirs"));
  {
    std::ofstream os(tmp.file("nodirs") + "/manifest.txt");
    os << "label +1 = smooth\nlabel -1 = speckled\n";
  }
  CHECK_THROWS_AS(data::load_dataset(tmp.file("nodirs")), DataError);

  // Malformed manifest line.
  fs::create_directories(tmp.file("badline"));
  {
    std::ofstream os(tmp.file("badline") + "/manifest.txt");
    os << "this is not a label line\n";
  }
  CHECK_THROWS_AS(data::load_dataset(tmp.file("badline")), DataError);
}
