#include "dcal/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dcal/errors.hpp"

namespace dcal::features {

FeatureMatrix extract_features(models::GanParams<float>& params,
                               const models::NetworkConfig& net,
                               const data::Dataset& dataset,
                               models::Fusion mode,
                               const Digest256& checkpoint_fingerprint) {
  FeatureMatrix fm;
  fm.n = static_cast<std::int64_t>(dataset.images.size());
  fm.d = models::fused_dim(net, mode);
  fm.fusion = mode;
  fm.checkpoint_fingerprint = checkpoint_fingerprint;
  fm.rows.resize(static_cast<std::size_t>(fm.n * fm.d));
  fm.labels.resize(static_cast<std::size_t>(fm.n));

  ad::NoGradScope frozen;
  for (std::int64_t i = 0; i < fm.n; ++i) {
    const auto& img = dataset.images[static_cast<std::size_t>(i)];
    const auto x = ad::Var<float>::constant(img.pixels);
    auto disc = models::discriminator_forward(params, net, x, false);
    const ad::Var<float> fused = models::fuse_features(disc.features, net, mode);
    const auto& vals = fused.value().values;
    if (static_cast<std::int64_t>(vals.size()) != fm.d) {
      throw std::logic_error("extract_features: fused dim " +
                             std::to_string(vals.size()) + " != expected " +
                             std::to_string(fm.d));
    }
    for (float v : vals) {
      if (!std::isfinite(v)) {
        throw NumericError("extract_features: non-finite feature for image '" +
                           img.id + "'");
      }
    }
    std::copy(vals.begin(), vals.end(), fm.rows.begin() + i * fm.d);
    fm.labels[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(img.label);
  }
  return fm;
}

namespace {

constexpr char kMagic[4] = {'D', 'C', 'F', 'M'};
constexpr std::uint16_t kVersion = 1;

void write_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t read_u16(std::istream& is) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2)) {
    throw DataError("feature file: truncated (u16)");
  }
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError("feature file: truncated (u64)");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint8_t fusion_code(models::Fusion f) {
  switch (f) {
    case models::Fusion::F1: return 1;
    case models::Fusion::F2: return 2;
    default: return 3;
  }
}

models::Fusion fusion_of_code(std::uint8_t c) {
  switch (c) {
    case 1: return models::Fusion::F1;
    case 2: return models::Fusion::F2;
    case 3: return models::Fusion::F3;
    default:
      throw DataError("feature file: bad fusion code " + std::to_string(c));
  }
}

}  // namespace

void save_features(const std::string& path, const FeatureMatrix& fm) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("save_features: cannot open '" + path + "'");
  os.write(kMagic, 4);
  write_u16(os, kVersion);
  const std::uint8_t mode = fusion_code(fm.fusion);
  os.write(reinterpret_cast<const char*>(&mode), 1);
  os.write(reinterpret_cast<const char*>(fm.checkpoint_fingerprint.data()), 32);
  write_u64(os, static_cast<std::uint64_t>(fm.n));
  write_u64(os, static_cast<std::uint64_t>(fm.d));
  static_assert(std::endian::native == std::endian::little ||
                    std::endian::native == std::endian::big,
                "mixed-endian unsupported");
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(fm.rows.data()),
             static_cast<std::streamsize>(fm.rows.size() * sizeof(float)));
  } else {
    for (float f : fm.rows) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      unsigned char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  os.write(reinterpret_cast<const char*>(fm.labels.data()),
           static_cast<std::streamsize>(fm.labels.size()));
  if (!os) throw DataError("save_features: write to '" + path + "' failed");
}

FeatureMatrix load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_features: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("load_features: bad magic in '" + path + "'");
  }
  const std::uint16_t version = read_u16(is);
  if (version != kVersion) {
    throw DataError("load_features: unsupported version " +
                    std::to_string(version));
  }
  FeatureMatrix fm;
  std::uint8_t mode = 0;
  if (!is.read(reinterpret_cast<char*>(&mode), 1)) {
    throw DataError("load_features: truncated fusion mode");
  }
  fm.fusion = fusion_of_code(mode);
  if (!is.read(reinterpret_cast<char*>(fm.checkpoint_fingerprint.data()), 32)) {
    throw DataError("load_features: truncated fingerprint");
  }
  fm.n = static_cast<std::int64_t>(read_u64(is));
  fm.d = static_cast<std::int64_t>(read_u64(is));
  if (fm.n < 0 || fm.d < 0) throw DataError("load_features: negative dims");
  fm.rows.resize(static_cast<std::size_t>(fm.n * fm.d));
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(fm.rows.data()),
                 static_cast<std::streamsize>(fm.rows.size() * sizeof(float)))) {
      throw DataError("load_features: truncated rows");
    }
  } else {
    for (auto& f : fm.rows) {
      unsigned char b[4];
      if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw DataError("load_features: truncated rows");
      }
      std::uint32_t u = 0;
      for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
      std::memcpy(&f, &u, 4);
    }
  }
  fm.labels.resize(static_cast<std::size_t>(fm.n));
  if (!is.read(reinterpret_cast<char*>(fm.labels.data()),
               static_cast<std::streamsize>(fm.labels.size()))) {
    throw DataError("load_features: truncated labels");
  }
  for (std::int8_t l : fm.labels) {
    if (l != 1 && l != -1) {
      throw DataError("load_features: bad label " + std::to_string(l));
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw DataError("load_features: trailing bytes in '" + path + "'");
  }
  return fm;
}

}  // namespace dcal::features
