#include "dcal/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dcal/errors.hpp"
#include "dcal/losses.hpp"

namespace fs = std::filesystem;

namespace dcal::gan {

namespace {

opt::AdamConfig<float> adam_config(const TrainConfig& cfg) {
  opt::AdamConfig<float> a;
  a.lr = cfg.lr;
  a.beta1 = cfg.beta1;
  return a;
}

void append_record(std::ofstream& os, const LossRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(r.iter), r.l_d_real, r.l_d_fake,
                r.l_d, r.l_g_image, r.l_g_feature, r.l_g);
  os << buf;
}

std::string epoch_name(const char* stem, std::uint64_t epoch, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_e%04llu%s", stem,
                static_cast<unsigned long long>(epoch), ext);
  return buf;
}

Tensor4<float> batch_of(const data::Dataset& dataset,
                        const std::vector<std::size_t>& order,
                        std::size_t start, std::int64_t batch) {
  const std::int64_t s = dataset.image_size;
  Tensor4<float> out({batch, 1, s, s});
  for (std::int64_t i = 0; i < batch; ++i) {
    const auto& img = dataset.images[order[start + static_cast<std::size_t>(i)]];
    std::copy(img.pixels.values.begin(), img.pixels.values.end(),
              out.values.begin() + i * s * s);
  }
  return out;
}

}  // namespace

TrainState::TrainState(const models::NetworkConfig& net, const TrainConfig& cfg)
    : params(models::init_params<float>(net, cfg.seed)),
      g_opt(params.generator_trainables(), adam_config(cfg)),
      d_opt(params.discriminator_trainables(), adam_config(cfg)),
      rng(cfg.seed) {}

void resume_train_state(TrainState& state, const std::string& checkpoint_path,
                        const Digest256& fingerprint) {
  const CheckpointInfo info =
      load_checkpoint(checkpoint_path, state.params, state.g_opt.state(),
                      state.d_opt.state(), fingerprint);
  state.rng = info.rng;
  state.epoch = info.epoch;
  state.iteration = info.iteration;
}

TrainResult train(TrainState& state, const data::Dataset& dataset,
                  const models::NetworkConfig& net, const TrainConfig& cfg,
                  const std::string& out_dir, const Digest256& fingerprint) {
  if (cfg.batch_size < 2) {
    throw ConfigError("train: batch_size must be >= 2 (batchnorm)");
  }
  if (!(cfg.lr > 0)) throw ConfigError("train: lr must be > 0");
  if (cfg.d_steps_per_g_step < 1) {
    throw ConfigError("train: d_steps_per_g_step must be >= 1");
  }
  const std::int64_t n = static_cast<std::int64_t>(dataset.images.size());
  if (n < cfg.batch_size) {
    throw DataError("train: dataset of " + std::to_string(n) +
                    " images is smaller than batch size " +
                    std::to_string(cfg.batch_size));
  }
  if (dataset.image_size != net.image_size) {
    throw DataError("train: dataset image size " +
                    std::to_string(dataset.image_size) +
                    " != network image size " + std::to_string(net.image_size));
  }

  const bool emit = !out_dir.empty();
  std::ofstream loss_csv;
  if (emit) {
    fs::create_directories(out_dir);
    const bool fresh = state.iteration == 0;
    loss_csv.open(fs::path(out_dir) / "losses.csv",
                  fresh ? std::ios::trunc : std::ios::app);
    if (!loss_csv) throw DataError("train: cannot open losses.csv in '" + out_dir + "'");
    if (fresh) {
      loss_csv << "iter,l_d_real,l_d_fake,l_d,l_g_image,l_g_feature,l_g\n";
    }
  }

  auto save = [&](const std::string& name) {
    save_checkpoint((fs::path(out_dir) / name).string(), state.params,
                    state.g_opt.state(), state.d_opt.state(), state.epoch,
                    state.iteration, state.rng, fingerprint);
  };
  auto emit_grid = [&](std::uint64_t epoch) {
    const Tensor4<float> grid =
        sample_grid(state.params, net, cfg.sample_rows, cfg.sample_cols,
                    cfg.seed + epoch);
    data::write_pgm((fs::path(out_dir) / epoch_name("samples", epoch, ".pgm")).string(),
                    grid);
  };

  TrainResult result;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  const std::int64_t batches_per_epoch = n / cfg.batch_size;

  for (; state.epoch < static_cast<std::uint64_t>(cfg.epochs); ++state.epoch) {
    if (emit && std::find(cfg.sample_grid_epochs.begin(),
                          cfg.sample_grid_epochs.end(),
                          static_cast<int>(state.epoch)) !=
                    cfg.sample_grid_epochs.end()) {
      emit_grid(state.epoch);
    }

    // Restart from the identity each epoch so the permutation depends only on
    // the RNG state, keeping resumed runs identical to uninterrupted ones.
    std::iota(order.begin(), order.end(), std::size_t{0});
    state.rng.shuffle(order.begin(), order.end());
    for (std::int64_t b = 0; b < batches_per_epoch; ++b) {
      const Tensor4<float> real_batch = batch_of(
          dataset, order, static_cast<std::size_t>(b * cfg.batch_size),
          cfg.batch_size);

      LossRecord rec;
      rec.iter = state.iteration;
      ad::Var<float> real_fused_const;

      const auto g_vars = state.params.generator_trainables();
      const auto d_vars = state.params.discriminator_trainables();
      auto fingerprint_of = [](const std::vector<ad::Var<float>>& vars) {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto& v : vars) {
          const auto& vals = v.value().values;
          const auto* bytes = reinterpret_cast<const unsigned char*>(vals.data());
          for (std::size_t i = 0; i < vals.size() * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
          }
        }
        return h;
      };

      for (int ds = 0; ds < cfg.d_steps_per_g_step; ++ds) {
        // --- discriminator step: generator frozen ---
        const std::uint64_t g_before = fingerprint_of(g_vars);
        Tensor4<float> fake_batch;
        {
          ad::NoGradScope frozen;
          const auto z = ad::Var<float>::constant(
              models::sample_z<float>(state.rng, cfg.batch_size, net.z_dim));
          fake_batch =
              models::generator_forward(state.params, net, z, true).value();
        }
        auto d_real = models::discriminator_forward(
            state.params, net, ad::Var<float>::leaf(real_batch, false), true);
        auto d_fake = models::discriminator_forward(
            state.params, net, ad::Var<float>::constant(std::move(fake_batch)),
            true);
        auto d_loss = discriminator_loss(d_real.prob, d_fake.prob);
        ad::backward(d_loss.l_d);
        const opt::StepOutcome d_step = state.d_opt.step();
        if (!d_step.applied) {
          if (emit) save("diagnostic.dcal");
          throw NumericError("train: discriminator " + d_step.note +
                             " at iteration " + std::to_string(rec.iter));
        }
        state.d_opt.zero_grad();
        if (fingerprint_of(g_vars) != g_before) {
          throw std::logic_error(
              "train: discriminator step mutated generator parameters");
        }
        rec.l_d_real = static_cast<double>(d_loss.l_d_real.item());
        rec.l_d_fake = static_cast<double>(d_loss.l_d_fake.item());
        real_fused_const = d_real.fused.detach();
      }
      rec.l_d = rec.l_d_real + rec.l_d_fake;

      // --- generator step: discriminator frozen ---
      const std::uint64_t d_before = fingerprint_of(d_vars);
      const auto z = ad::Var<float>::constant(
          models::sample_z<float>(state.rng, cfg.batch_size, net.z_dim));
      auto fake = models::generator_forward(state.params, net, z, true);
      auto d_on_fake = models::discriminator_forward(state.params, net, fake, true);
      auto g_loss =
          generator_loss(d_on_fake.prob, real_fused_const, d_on_fake.fused);
      ad::backward(g_loss.l_g);
      const opt::StepOutcome g_step = state.g_opt.step();
      if (!g_step.applied) {
        if (emit) save("diagnostic.dcal");
        throw NumericError("train: generator " + g_step.note +
                           " at iteration " + std::to_string(rec.iter));
      }
      state.g_opt.zero_grad();
      state.d_opt.zero_grad();  // discards D grads from the fake branch
      if (fingerprint_of(d_vars) != d_before) {
        throw std::logic_error(
            "train: generator step mutated discriminator parameters");
      }
      rec.l_g_image = static_cast<double>(g_loss.l_g_image.item());
      rec.l_g_feature = static_cast<double>(g_loss.l_g_feature.item());
      rec.l_g = rec.l_g_image + rec.l_g_feature;

      if (!std::isfinite(rec.l_d) || !std::isfinite(rec.l_g)) {
        if (emit) save("diagnostic.dcal");
        throw NumericError("train: non-finite loss at iteration " +
                           std::to_string(rec.iter));
      }
      if (emit) append_record(loss_csv, rec);
      result.records.push_back(rec);
      state.iteration += 1;
    }

    if (emit && cfg.checkpoint_every > 0 &&
        (state.epoch + 1) % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
      save(epoch_name("checkpoint", state.epoch + 1, ".dcal"));
    }
  }

  if (emit) {
    emit_grid(state.epoch);
    save("checkpoint_final.dcal");
    loss_csv.flush();
  }
  result.final_epoch = state.epoch;
  result.final_iteration = state.iteration;
  return result;
}

Tensor4<float> sample_grid(models::GanParams<float>& params,
                           const models::NetworkConfig& net, int rows,
                           int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("sample_grid: rows/cols must be >= 1");
  }
  Rng rng(seed);
  const auto z = ad::Var<float>::constant(
      models::sample_z<float>(rng, static_cast<std::int64_t>(rows) * cols,
                              net.z_dim));
  ad::NoGradScope frozen;
  const Tensor4<float> samples =
      models::generator_forward(params, net, z, false).value();

  const std::int64_t s = net.image_size;
  constexpr std::int64_t kSep = 2;
  const std::int64_t h = rows * s + (rows - 1) * kSep;
  const std::int64_t w = cols * s + (cols - 1) * kSep;
  Tensor4<float> grid({1, 1, h, w});
  std::fill(grid.values.begin(), grid.values.end(), -1.0f);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::int64_t tile = static_cast<std::int64_t>(r) * cols + c;
      const float* src = samples.data() + tile * s * s;
      const std::int64_t oy = r * (s + kSep);
      const std::int64_t ox = c * (s + kSep);
      for (std::int64_t y = 0; y < s; ++y) {
        std::copy(src + y * s, src + (y + 1) * s,
                  grid.values.begin() + (oy + y) * w + ox);
      }
    }
  }
  return grid;
}

void write_loss_csv(const std::string& path,
                    const std::vector<LossRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("write_loss_csv: cannot open '" + path + "'");
  os << "iter,l_d_real,l_d_fake,l_d,l_g_image,l_g_feature,l_g\n";
  for (const auto& r : records) append_record(os, r);
}

}  // namespace dcal::gan
