#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/adam.hpp"
#include "dcal/checkpoint.hpp"
#include "dcal/data.hpp"
#include "dcal/models.hpp"
#include "dcal/rng.hpp"

namespace dcal::gan {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 1;
  float lr = 0.0002f;
  float beta1 = 0.5f;
  int d_steps_per_g_step = 1;
  std::uint64_t seed = 0;
  std::vector<int> sample_grid_epochs;  // grids rendered before these epochs
  int checkpoint_every = 0;             // every N epochs; 0 = final only
  int sample_rows = 4;
  int sample_cols = 4;
};

struct LossRecord {
  std::uint64_t iter = 0;
  double l_d_real = 0, l_d_fake = 0, l_d = 0;
  double l_g_image = 0, l_g_feature = 0, l_g = 0;
};

/// Everything the loop mutates, bundled so a checkpoint can restore it
/// exactly: parameters, both optimizers, the RNG, and the counters.
struct TrainState {
  models::GanParams<float> params;
  opt::Adam<float> g_opt;
  opt::Adam<float> d_opt;
  Rng rng;
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;

  TrainState(const models::NetworkConfig& net, const TrainConfig& cfg);
};

/// Restores state from a checkpoint written with the same config fingerprint.
void resume_train_state(TrainState& state, const std::string& checkpoint_path,
                        const Digest256& fingerprint);

struct TrainResult {
  std::vector<LossRecord> records;
  std::uint64_t final_epoch = 0;
  std::uint64_t final_iteration = 0;
};

/// Alternating-step adversarial training from state.epoch up to cfg.epochs.
/// Per iteration: a discriminator step on a real batch vs a frozen-generator
/// fake batch, then a generator step on a fresh fake batch with the real
/// batch's fused features reused as constants. Deterministic under seed.
/// With a nonempty out_dir, emits losses.csv, checkpoints, and sample grids;
/// a non-finite loss aborts with a diagnostic checkpoint.
TrainResult train(TrainState& state, const data::Dataset& dataset,
                  const models::NetworkConfig& net, const TrainConfig& cfg,
                  const std::string& out_dir, const Digest256& fingerprint);

/// rows*cols generator samples (eval mode) tiled with 2-pixel separators,
/// as one [1,1,H,W] image in [-1,1].
Tensor4<float> sample_grid(models::GanParams<float>& params,
                           const models::NetworkConfig& net, int rows,
                           int cols, std::uint64_t seed);

void write_loss_csv(const std::string& path,
                    const std::vector<LossRecord>& records);

}  // namespace dcal::gan
