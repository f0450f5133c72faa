#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "dcal/data.hpp"
#include "dcal/errors.hpp"
#include "dcal/features.hpp"
#include "dcal/hash.hpp"
#include "dcal/models.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dcal;

namespace {

struct Fixture {
  models::NetworkConfig net =
      models::NetworkConfig::from_preset(models::Preset::desk);
  models::GanParams<float> params = models::init_params<float>(net, 3);
  data::Dataset dataset =
      data::generate_synthetic(data::SynthSpec::defaults(64, 3, 17));
  Digest256 fp = sha256("feature fixture");
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("features: extraction dims, labels, and determinism") {
  Fixture fx;
  const auto fm =
      features::extract_features(fx.params, fx.net, fx.dataset,
                                 models::Fusion::F2, fx.fp);

  CHECK(fm.n == 6);
  CHECK(fm.d == models::fused_dim(fx.net, models::Fusion::F2));
  CHECK(fm.rows.size() == static_cast<std::size_t>(fm.n * fm.d));
  CHECK(fm.fusion == models::Fusion::F2);
  CHECK(fm.checkpoint_fingerprint == fx.fp);

  REQUIRE(fm.labels.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(static_cast<int>(fm.labels[i]) == fx.dataset.images[i].label);
  }
  for (float v : fm.rows) CHECK(std::isfinite(v));

  const auto again =
      features::extract_features(fx.params, fx.net, fx.dataset,
                                 models::Fusion::F2, fx.fp);
  CHECK(fm.rows == again.rows);
}

TEST_CASE("features: shallow fusions are exact prefixes of the deeper ones") {
  Fixture fx;
  const auto f1 = features::extract_features(fx.params, fx.net, fx.dataset,
                                             models::Fusion::F1, fx.fp);
  const auto f2 = features::extract_features(fx.params, fx.net, fx.dataset,
                                             models::Fusion::F2, fx.fp);
  const auto f3 = features::extract_features(fx.params, fx.net, fx.dataset,
                                             models::Fusion::F3, fx.fp);

  REQUIRE(f1.d < f2.d);
  REQUIRE(f2.d < f3.d);
  for (std::int64_t i = 0; i < f1.n; ++i) {
    for (std::int64_t j = 0; j < f1.d; ++j) {
      CHECK(f1.rows[static_cast<std::size_t>(i * f1.d + j)] ==
            f3.rows[static_cast<std::size_t>(i * f3.d + j)]);
    }
    for (std::int64_t j = 0; j < f2.d; ++j) {
      CHECK(f2.rows[static_cast<std::size_t>(i * f2.d + j)] ==
            f3.rows[static_cast<std::size_t>(i * f3.d + j)]);
    }
  }
}

TEST_CASE("features: non-finite activations name the offending image") {
  Fixture fx;
  // A +inf bias on the deepest discriminator layer rides through batchnorm,
  // the activation, and the pool (it is always the window max). Pointing the
  // head weights over that block at -1 keeps the output probability finite
  // (sigmoid of -inf is 0), so the feature finiteness check is what trips.
  auto refs = fx.params.walk();
  std::vector<float>* last_disc_bias = nullptr;
  std::vector<float>* last_gamma = nullptr;
  std::vector<float>* head_w = nullptr;
  for (const auto& r : refs) {
    if (r.name.rfind("disc", 0) == 0 && r.name.find(".bias") != std::string::npos) {
      last_disc_bias = r.data;  // keep overwriting: the deepest wins
    }
    if (r.name.rfind("disc", 0) == 0 &&
        r.name.find("bn_gamma") != std::string::npos) {
      last_gamma = r.data;
    }
    if (r.name == "head.w") head_w = r.data;
  }
  REQUIRE(last_disc_bias != nullptr);
  REQUIRE(last_gamma != nullptr);
  REQUIRE(head_w != nullptr);
  for (auto& b : *last_disc_bias) b = std::numeric_limits<float>::infinity();
  for (auto& g : *last_gamma) g = 1.0f;  // keep the sign of +inf through bn
  const auto block =
      static_cast<std::size_t>(models::fused_dim(fx.net, models::Fusion::F1));
  REQUIRE(head_w->size() >= block);
  for (std::size_t i = 0; i < block; ++i) (*head_w)[i] = -1.0f;

  CHECK_THROWS_WITH_AS(
      features::extract_features(fx.params, fx.net, fx.dataset,
                                 models::Fusion::F1, fx.fp),
      doctest::Contains(fx.dataset.images.front().id.c_str()), NumericError);
}

TEST_CASE("features: file round trip preserves every field bit for bit") {
  Fixture fx;
  const auto fm = features::extract_features(fx.params, fx.net, fx.dataset,
                                             models::Fusion::F3, fx.fp);
  testutil::TempDir dir("features_io");
  const std::string path = dir.file("f3.dcfm");

  features::save_features(path, fm);
  const auto back = features::load_features(path);

  CHECK(back.n == fm.n);
  CHECK(back.d == fm.d);
  CHECK(back.fusion == fm.fusion);
  CHECK(back.checkpoint_fingerprint == fm.checkpoint_fingerprint);
  CHECK(back.rows == fm.rows);
  CHECK(back.labels == fm.labels);
}

TEST_CASE("features: corrupted feature files are rejected") {
  testutil::TempDir dir("features_corrupt");
  const std::string path = dir.file("f.dcfm");

  features::FeatureMatrix fm;
  fm.n = 2;
  fm.d = 3;
  fm.rows = {0.5f, -1.0f, 2.0f, 0.0f, 1.5f, -0.25f};
  fm.labels = {1, -1};
  fm.fusion = models::Fusion::F1;
  fm.checkpoint_fingerprint = sha256("x");
  features::save_features(path, fm);
  const std::vector<char> good = slurp(path);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(features::load_features(dir.file("absent.dcfm")),
                    DataError);
  }
  SUBCASE("bad magic") {
    auto bytes = good;
    bytes[0] = 'Z';
    spit(path, bytes);
    CHECK_THROWS_WITH_AS(features::load_features(path),
                         doctest::Contains("bad magic"), DataError);
  }
  SUBCASE("bad fusion code") {
    auto bytes = good;
    bytes[6] = 9;  // fusion byte follows the 4-byte magic and u16 version
    spit(path, bytes);
    CHECK_THROWS_WITH_AS(features::load_features(path),
                         doctest::Contains("fusion code"), DataError);
  }
  SUBCASE("truncated rows") {
    auto bytes = good;
    bytes.resize(bytes.size() - fm.labels.size() - 4);
    spit(path, bytes);
    CHECK_THROWS_AS(features::load_features(path), DataError);
  }
  SUBCASE("trailing bytes") {
    auto bytes = good;
    bytes.push_back('\0');
    spit(path, bytes);
    CHECK_THROWS_WITH_AS(features::load_features(path),
                         doctest::Contains("trailing"), DataError);
  }
  SUBCASE("label outside the two classes") {
    auto bytes = good;
    bytes[bytes.size() - 1] = 0;  // labels are the final n bytes
    spit(path, bytes);
    CHECK_THROWS_WITH_AS(features::load_features(path),
                         doctest::Contains("bad label"), DataError);
  }
}
