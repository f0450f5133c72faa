#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/data.hpp"
#include "dcal/hash.hpp"
#include "dcal/models.hpp"
#include "dcal/train.hpp"

namespace dcal::config {

/// Flat key=value run configuration. Every knob an experiment depends on
/// lives here, so a run is reproducible from its echoed config alone and the
/// run directory can be named by the config's hash.
struct RunConfig {
  // model
  std::string preset = "desk";
  std::string fusion = "F3";  // head sizing at train; extract/classify mode
  // training
  int batch_size = 64;
  int epochs = 1;
  double lr = 0.0002;
  double beta1 = 0.5;
  int d_steps_per_g_step = 1;
  int checkpoint_every = 0;            // every N epochs; 0 = final only
  std::string sample_grid_epochs;      // comma-separated epoch indices
  int sample_rows = 4;
  int sample_cols = 4;
  // synthetic data
  std::int64_t image_size = 0;  // 0 = the preset's native size
  int n_per_class = 100;
  int n_pos = 0;  // nonzero overrides for imbalanced datasets
  int n_neg = 0;
  double noise_sigma = 0.05;
  // classification
  double svm_c = 1.0;
  int k = 10;
  std::string extract_fusion;             // extraction depth; "" = `fusion`
  std::string eval_fusions = "F1,F2,F3";  // evaluate sweep axes
  std::string eval_ks = "5,10,20";
  // shared
  std::uint64_t seed = 1;
  std::string data_dir;
  std::string checkpoint;
  std::string features;
  std::string out_dir = "runs";
};

/// Parses `key = value` lines; '#' lines are comments, unknown keys are
/// rejected, the last assignment of a key wins.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Applies one "key=value" assignment (command-line override).
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Range/consistency checks beyond parsing; throws ConfigError.
void validate(const RunConfig& cfg);

/// Canonical echo of every key in declaration order. Hashing this text
/// identifies the run.
std::string effective_config(const RunConfig& cfg);

/// "cfg-<first 12 hex of sha256(effective)>-s<seed>".
std::string run_dir_name(const RunConfig& cfg);

models::NetworkConfig make_network_config(const RunConfig& cfg);
gan::TrainConfig make_train_config(const RunConfig& cfg);
data::SynthSpec make_synth_spec(const RunConfig& cfg);

/// Identity hash stored in checkpoints: the full architecture (so parameter
/// shapes are pinned) plus the optimization hyperparameters (batch_size, lr,
/// beta1, d_steps_per_g_step). Seeds, paths, epoch counts, and classifier
/// settings are excluded so a checkpoint stays reusable by sample/extract/
/// evaluate runs that share the model; resume restores the RNG state from
/// the checkpoint itself, so the seed needs no pinning.
Digest256 model_fingerprint(const RunConfig& cfg);

/// Architecture-only serialization feeding model_fingerprint.
std::string describe_network(const models::NetworkConfig& net);

std::vector<int> parse_int_list(const std::string& csv);
std::vector<models::Fusion> parse_fusion_list(const std::string& csv);

}  // namespace dcal::config
