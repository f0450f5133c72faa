#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/data.hpp"
#include "dcal/hash.hpp"
#include "dcal/models.hpp"

namespace dcal::features {

struct FeatureMatrix {
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::vector<float> rows;        // n*d, row-major, dataset order
  std::vector<std::int8_t> labels;  // +1 / -1 per row
  models::Fusion fusion = models::Fusion::F3;
  Digest256 checkpoint_fingerprint{};
};

/// Eval-mode discriminator features for every image, fused under `mode`
/// (independent of the mode the head was trained with). Deterministic;
/// throws NumericError on any non-finite feature.
FeatureMatrix extract_features(models::GanParams<float>& params,
                               const models::NetworkConfig& net,
                               const data::Dataset& dataset,
                               models::Fusion mode,
                               const Digest256& checkpoint_fingerprint);

// On-disk format: magic "DCFM", u16 version, u8 fusion mode (1/2/3), 32-byte
// checkpoint fingerprint, u64 n, u64 d, n*d little-endian float32, n int8
// labels.
void save_features(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix load_features(const std::string& path);

}  // namespace dcal::features
