#pragma once

#include <cstdint>
#include <string>

#include "dcal/adam.hpp"
#include "dcal/hash.hpp"
#include "dcal/models.hpp"
#include "dcal/rng.hpp"

// Binary checkpoint: magic "DCAL", u16 format version, 32-byte config
// fingerprint, epoch and iteration counters, every parameter/state array in
// declaration order as a u64 length prefix + little-endian float32 payload,
// both optimizer states, then the serialized RNG. Training runs in float32,
// so save followed by load is bitwise lossless.

namespace dcal::gan {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;
  Rng rng;
};

void save_checkpoint(const std::string& path,
                     models::GanParams<float>& params,
                     const opt::AdamState<float>& gen_opt,
                     const opt::AdamState<float>& disc_opt,
                     std::uint64_t epoch, std::uint64_t iteration,
                     const Rng& rng, const Digest256& config_fingerprint);

/// Loads into pre-shaped params/optimizer state (build them with init_params
/// and fresh Adam instances first). Throws DataError on bad magic, version,
/// fingerprint, or shape mismatch.
CheckpointInfo load_checkpoint(const std::string& path,
                               models::GanParams<float>& params,
                               opt::AdamState<float>& gen_opt,
                               opt::AdamState<float>& disc_opt,
                               const Digest256& expected_fingerprint);

/// Reads just the header fingerprint (for cross-checking a foreign file).
Digest256 read_checkpoint_fingerprint(const std::string& path);

}  // namespace dcal::gan
