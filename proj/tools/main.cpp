// dcal: adversarial feature learning on grayscale images.
//
// Subcommands cover the full pipeline: synthesize a two-class dataset, train
// the generator/discriminator pair, render sample grids, extract fused
// discriminator features, classify them with a squared-hinge SVM under
// stratified k-fold CV, sweep fusion depth x fold count, and numerically
// verify the minimax equilibrium identities.
//
// Every run writes its artifacts under <out_dir>/<config-hash>-s<seed>/ and
// echoes the effective config there, so identical configs reproduce
// identical files.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcal/classify.hpp"
#include "dcal/config.hpp"
#include "dcal/data.hpp"
#include "dcal/errors.hpp"
#include "dcal/features.hpp"
#include "dcal/models.hpp"
#include "dcal/svm.hpp"
#include "dcal/theory.hpp"
#include "dcal/train.hpp"

namespace fs = std::filesystem;
using dcal::config::RunConfig;

namespace {

// --config file, --set overrides, and the flags shared by every subcommand.
// Direct flags win over --set, which wins over the file.
struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "key=value config file (unknown keys rejected)");
    sub->add_option("--set", sets, "override one config key, e.g. --set lr=1e-4")
        ->take_all();
    out_opt = sub->add_option("--out", out_dir, "output root [out_dir]");
    seed_opt = sub->add_option("--seed", seed, "master seed [seed]");
  }

  RunConfig build() const {
    RunConfig cfg = config_path.empty() ? RunConfig{}
                                        : dcal::config::load_run_config(config_path);
    for (const auto& s : sets) dcal::config::apply_override(cfg, s);
    if (out_opt->count() > 0) cfg.out_dir = out_dir;
    if (seed_opt->count() > 0) cfg.seed = seed;
    return cfg;
  }
};

// Validates, creates the run directory, and echoes the effective config.
std::string prepare_run_dir(const RunConfig& cfg) {
  dcal::config::validate(cfg);
  const fs::path dir = fs::path(cfg.out_dir) / dcal::config::run_dir_name(cfg);
  fs::create_directories(dir);
  std::ofstream os(dir / "config.txt", std::ios::trunc);
  if (!os) {
    throw dcal::DataError("cannot write config echo in '" + dir.string() + "'");
  }
  os << dcal::config::effective_config(cfg);
  std::cout << "run directory: " << dir.string() << "\n";
  return dir.string();
}

dcal::gan::TrainState restore_state(const RunConfig& cfg,
                                    const dcal::models::NetworkConfig& net) {
  if (cfg.checkpoint.empty()) {
    throw dcal::ConfigError("a checkpoint path is required (checkpoint=<file>)");
  }
  dcal::gan::TrainState state(net, dcal::config::make_train_config(cfg));
  dcal::gan::resume_train_state(state, cfg.checkpoint,
                                dcal::config::model_fingerprint(cfg));
  return state;
}

int run_synth(const RunConfig& cfg) {
  const dcal::data::SynthSpec spec = dcal::config::make_synth_spec(cfg);
  const dcal::data::Dataset ds = dcal::data::generate_synthetic(spec);
  const std::string dir = prepare_run_dir(cfg);
  const std::string data_dir = (fs::path(dir) / "dataset").string();
  dcal::data::save_dataset(ds, data_dir);
  int pos = 0;
  for (const auto& img : ds.images) pos += img.label > 0 ? 1 : 0;
  std::cout << "dataset: " << ds.images.size() << " images ("
            << pos << " " << ds.pos_class << " / "
            << ds.images.size() - static_cast<std::size_t>(pos) << " "
            << ds.neg_class << "), " << ds.image_size << "x" << ds.image_size
            << "\n";
  std::cout << "wrote " << data_dir << "\n";
  return 0;
}

int run_train(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) {
    throw dcal::ConfigError("train requires a dataset (data_dir=<dir>)");
  }
  const dcal::models::NetworkConfig net = dcal::config::make_network_config(cfg);
  const dcal::gan::TrainConfig tc = dcal::config::make_train_config(cfg);
  const dcal::data::Dataset ds =
      dcal::data::load_dataset(cfg.data_dir, net.image_size);
  const dcal::Digest256 fp = dcal::config::model_fingerprint(cfg);
  const std::string dir = prepare_run_dir(cfg);

  dcal::gan::TrainState state(net, tc);
  if (!cfg.checkpoint.empty()) {
    dcal::gan::resume_train_state(state, cfg.checkpoint, fp);
    std::cout << "resumed from " << cfg.checkpoint << " at epoch "
              << state.epoch << "\n";
  }
  const dcal::gan::TrainResult result =
      dcal::gan::train(state, ds, net, tc, dir, fp);
  std::cout << "trained to epoch " << result.final_epoch << " ("
            << result.final_iteration << " iterations)\n";
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    std::printf("final losses: l_d = %.6f, l_g = %.6f\n", last.l_d, last.l_g);
  }
  std::cout << "losses: " << dir << "/losses.csv\n";
  std::cout << "checkpoint: " << dir << "/checkpoint_final.dcal\n";
  return 0;
}

int run_sample(const RunConfig& cfg) {
  const dcal::models::NetworkConfig net = dcal::config::make_network_config(cfg);
  dcal::gan::TrainState state = restore_state(cfg, net);
  const std::string dir = prepare_run_dir(cfg);
  const dcal::Tensor4<float> grid = dcal::gan::sample_grid(
      state.params, net, cfg.sample_rows, cfg.sample_cols, cfg.seed);
  const std::string path = (fs::path(dir) / "sample_grid.pgm").string();
  dcal::data::write_pgm(path, grid);
  std::cout << "wrote " << cfg.sample_rows << "x" << cfg.sample_cols
            << " sample grid: " << path << "\n";
  return 0;
}

int run_extract(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) {
    throw dcal::ConfigError("extract requires a dataset (data_dir=<dir>)");
  }
  const dcal::models::NetworkConfig net = dcal::config::make_network_config(cfg);
  const dcal::data::Dataset ds =
      dcal::data::load_dataset(cfg.data_dir, net.image_size);
  dcal::gan::TrainState state = restore_state(cfg, net);
  const dcal::models::Fusion mode = dcal::models::fusion_from_string(
      cfg.extract_fusion.empty() ? cfg.fusion : cfg.extract_fusion);
  const dcal::features::FeatureMatrix fm = dcal::features::extract_features(
      state.params, net, ds, mode, dcal::config::model_fingerprint(cfg));
  const std::string dir = prepare_run_dir(cfg);
  const std::string path =
      (fs::path(dir) / ("features_" + dcal::models::to_string(mode) + ".dcfm"))
          .string();
  dcal::features::save_features(path, fm);
  std::cout << "extracted " << fm.n << " x " << fm.d << " "
            << dcal::models::to_string(mode) << " features: " << path << "\n";
  return 0;
}

int run_classify(const RunConfig& cfg) {
  if (cfg.features.empty()) {
    throw dcal::ConfigError("classify requires a feature file (features=<file>)");
  }
  const dcal::features::FeatureMatrix fm =
      dcal::features::load_features(cfg.features);
  const dcal::classify::EvaluationReport report =
      dcal::classify::evaluate(fm, cfg.k, cfg.seed, cfg.svm_c);
  const std::string dir = prepare_run_dir(cfg);
  dcal::classify::write_report_csv((fs::path(dir) / "report.csv").string(),
                                   report);
  dcal::classify::write_roc_csv((fs::path(dir) / "roc.csv").string(),
                                report.pooled_roc);

  // Also fit one model on the full matrix for downstream use.
  const std::vector<double> x(fm.rows.begin(), fm.rows.end());
  const std::vector<int> y(fm.labels.begin(), fm.labels.end());
  dcal::svm::FitOptions opts;
  opts.c = cfg.svm_c;
  const dcal::svm::SvmModel model = dcal::svm::svm_train(x, fm.n, fm.d, y, opts);
  dcal::svm::save_model((fs::path(dir) / "model.dsvm").string(), model);

  std::cout << dcal::classify::report_text(report);
  std::cout << "report: " << dir << "/report.csv\n";
  std::cout << "model:  " << dir << "/model.dsvm\n";
  return 0;
}

int run_evaluate(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) {
    throw dcal::ConfigError("evaluate requires a dataset (data_dir=<dir>)");
  }
  const dcal::models::NetworkConfig net = dcal::config::make_network_config(cfg);
  const dcal::data::Dataset ds =
      dcal::data::load_dataset(cfg.data_dir, net.image_size);
  dcal::gan::TrainState state = restore_state(cfg, net);
  const std::vector<dcal::models::Fusion> fusions =
      dcal::config::parse_fusion_list(cfg.eval_fusions);
  const std::vector<int> ks = dcal::config::parse_int_list(cfg.eval_ks);
  if (ks.empty()) throw dcal::ConfigError("eval_ks is empty");

  const dcal::Digest256 fp = dcal::config::model_fingerprint(cfg);
  std::vector<dcal::features::FeatureMatrix> fms;
  fms.reserve(fusions.size());
  for (dcal::models::Fusion mode : fusions) {
    fms.push_back(dcal::features::extract_features(state.params, net, ds, mode, fp));
  }
  const std::vector<dcal::classify::GridCell> grid =
      dcal::classify::evaluate_grid(fms, ks, cfg.seed, cfg.svm_c);

  const std::string dir = prepare_run_dir(cfg);
  dcal::classify::write_grid_csv((fs::path(dir) / "grid.csv").string(), grid);
  for (const auto& cell : grid) {
    const std::string tag =
        dcal::models::to_string(cell.fusion) + "_k" + std::to_string(cell.k);
    dcal::classify::write_report_csv(
        (fs::path(dir) / ("report_" + tag + ".csv")).string(), cell.report);
    dcal::classify::write_roc_csv(
        (fs::path(dir) / ("roc_" + tag + ".csv")).string(),
        cell.report.pooled_roc);
    std::printf(
        "%s k=%-2d  mean accuracy %s  mean auc %.4f  pooled auc %.4f\n",
        dcal::models::to_string(cell.fusion).c_str(), cell.k,
        cell.report.mean_accuracy.defined
            ? std::to_string(cell.report.mean_accuracy.value).c_str()
            : "nan",
        cell.report.mean_auc, cell.report.pooled_roc.auc);
  }
  std::cout << "grid: " << dir << "/grid.csv\n";
  return 0;
}

struct TheoryPair {
  std::string id;
  dcal::theory::DiscreteDistribution p;
  dcal::theory::DiscreteDistribution q;
  bool identical = false;
};

dcal::theory::DiscreteDistribution random_distribution(dcal::Rng& rng,
                                                       std::size_t support,
                                                       bool sparse) {
  std::vector<double> probs(support);
  double sum = 0.0;
  while (sum <= 0.0) {
    for (auto& v : probs) {
      v = sparse && rng.next_double() < 0.3 ? 0.0 : rng.next_double();
    }
    sum = 0.0;
    for (double v : probs) sum += v;
  }
  for (auto& v : probs) v /= sum;
  // Renormalize exactly enough for the validator's 1e-12 sum check.
  double check = 0.0;
  for (double v : probs) check += v;
  probs.back() += 1.0 - check;
  return dcal::theory::DiscreteDistribution::validated(std::move(probs));
}

int run_verify_theory(int n_random, std::uint64_t seed) {
  using dcal::theory::DiscreteDistribution;
  auto dist = [](std::vector<double> p) {
    return DiscreteDistribution::validated(std::move(p));
  };
  std::vector<TheoryPair> pairs = {
      {"identical-2", dist({0.5, 0.5}), dist({0.5, 0.5}), true},
      {"identical-4", dist({0.25, 0.25, 0.25, 0.25}),
       dist({0.25, 0.25, 0.25, 0.25}), true},
      {"skewed-2", dist({0.7, 0.3}), dist({0.5, 0.5}), false},
      {"skewed-4", dist({0.4, 0.3, 0.2, 0.1}), dist({0.25, 0.25, 0.25, 0.25}),
       false},
      {"disjoint-2", dist({1.0, 0.0}), dist({0.0, 1.0}), false},
      {"disjoint-4", dist({0.5, 0.5, 0.0, 0.0}), dist({0.0, 0.0, 0.5, 0.5}),
       false},
      {"point-mass", dist({1.0, 0.0, 0.0, 0.0}),
       dist({0.25, 0.25, 0.25, 0.25}), false},
  };
  dcal::Rng rng(seed);
  for (int i = 0; i < n_random; ++i) {
    const std::size_t support = 2 + rng.uniform_index(63);
    const bool sparse = i % 4 == 0;
    char id[32];
    std::snprintf(id, sizeof(id), "random-%d", i);
    pairs.push_back({id, random_distribution(rng, support, sparse),
                     random_distribution(rng, support, sparse), false});
  }

  const double ln2 = std::log(2.0);
  const double ln4 = std::log(4.0);
  const double tol = 1e-12;
  double max_delta = 0.0;
  int violations = 0;
  std::printf("%-14s %22s %22s %22s %12s\n", "pair", "jsd", "v_direct",
              "2*jsd-ln4", "abs_delta");
  for (const auto& pair : pairs) {
    const double jsd = dcal::theory::js_divergence(pair.p, pair.q);
    const double v = dcal::theory::value_at_optimum(pair.p, pair.q);
    const double predicted = 2.0 * jsd - ln4;
    const double delta = std::abs(v - predicted);
    max_delta = std::max(max_delta, delta);
    std::printf("%-14s %22.15g %22.15g %22.15g %12.3e\n", pair.id.c_str(), jsd,
                v, predicted, delta);
    std::string why;
    if (delta > tol) why = "identity gap " + std::to_string(delta);
    if (jsd < -tol || jsd > ln2 + tol) why = "jsd outside [0, ln 2]";
    if (v < -ln4 - tol) why = "value below -ln 4";
    if (pair.identical && std::abs(v + ln4) > tol) {
      why = "identical pair not at -ln 4";
    }
    if (!why.empty()) {
      ++violations;
      std::fprintf(stderr, "violation at %s: %s\n", pair.id.c_str(),
                   why.c_str());
    }
  }
  std::printf("%zu pairs checked, max |delta| = %.3e\n", pairs.size(),
              max_delta);
  if (violations > 0) {
    std::fprintf(stderr, "%d identity violation(s)\n", violations);
    return 4;
  }
  std::printf("all equilibrium identities hold\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "adversarial feature learning on grayscale images: DCGAN-style "
      "generator vs overlapping-pool discriminator, fused multi-layer "
      "features, squared-hinge SVM evaluation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a two-class synthetic dataset");
  CommonOpts synth_common;
  synth_common.attach(synth);
  std::string preset, fusion;
  std::int64_t size = 0;
  int n_per_class = 0;
  auto* synth_preset = synth->add_option("--preset", preset, "desk | paper [preset]");
  auto* synth_size = synth->add_option("--size", size, "image side [image_size]");
  auto* synth_n = synth->add_option("--n", n_per_class, "images per class [n_per_class]");

  auto* train = app.add_subcommand("train", "adversarial training on a dataset");
  CommonOpts train_common;
  train_common.attach(train);
  std::string data_dir, resume;
  int epochs = 0, batch = 0;
  auto* train_data = train->add_option("--data", data_dir, "dataset dir [data_dir]");
  auto* train_preset = train->add_option("--preset", preset, "desk | paper [preset]");
  auto* train_fusion = train->add_option("--fusion", fusion, "head fusion mode [fusion]");
  auto* train_epochs = train->add_option("--epochs", epochs, "epochs to reach [epochs]");
  auto* train_batch = train->add_option("--batch", batch, "batch size [batch_size]");
  auto* train_resume = train->add_option("--resume", resume, "checkpoint to resume [checkpoint]");

  auto* sample = app.add_subcommand("sample", "render a generator sample grid");
  CommonOpts sample_common;
  sample_common.attach(sample);
  std::string checkpoint;
  int rows = 0, cols = 0;
  auto* sample_ckpt = sample->add_option("--checkpoint", checkpoint, "checkpoint file [checkpoint]");
  auto* sample_preset = sample->add_option("--preset", preset, "desk | paper [preset]");
  auto* sample_fusion = sample->add_option("--fusion", fusion, "head fusion mode [fusion]");
  auto* sample_rows = sample->add_option("--rows", rows, "grid rows [sample_rows]");
  auto* sample_cols = sample->add_option("--cols", cols, "grid cols [sample_cols]");

  auto* extract = app.add_subcommand("extract", "extract fused discriminator features");
  CommonOpts extract_common;
  extract_common.attach(extract);
  auto* extract_ckpt = extract->add_option("--checkpoint", checkpoint, "checkpoint file [checkpoint]");
  auto* extract_data = extract->add_option("--data", data_dir, "dataset dir [data_dir]");
  auto* extract_preset = extract->add_option("--preset", preset, "desk | paper [preset]");
  auto* extract_fusion = extract->add_option("--fusion", fusion, "fusion depth to extract [extract_fusion]");

  auto* classify = app.add_subcommand("classify", "stratified k-fold SVM evaluation of a feature file");
  CommonOpts classify_common;
  classify_common.attach(classify);
  std::string features;
  int folds = 0;
  double svm_c = 0.0;
  auto* classify_features = classify->add_option("--features", features, "feature file [features]");
  auto* classify_k = classify->add_option("--k", folds, "fold count [k]");
  auto* classify_c = classify->add_option("--c", svm_c, "SVM C [svm_c]");

  auto* evaluate = app.add_subcommand("evaluate", "sweep fusion modes x fold counts in one run");
  CommonOpts evaluate_common;
  evaluate_common.attach(evaluate);
  std::string fusions_csv, ks_csv;
  auto* evaluate_ckpt = evaluate->add_option("--checkpoint", checkpoint, "checkpoint file [checkpoint]");
  auto* evaluate_data = evaluate->add_option("--data", data_dir, "dataset dir [data_dir]");
  auto* evaluate_preset = evaluate->add_option("--preset", preset, "desk | paper [preset]");
  auto* evaluate_fusion = evaluate->add_option("--fusion", fusions_csv, "comma list, e.g. F1,F2,F3 [eval_fusions]");
  auto* evaluate_k = evaluate->add_option("--k", ks_csv, "comma list, e.g. 5,10,20 [eval_ks]");
  auto* evaluate_c = evaluate->add_option("--c", svm_c, "SVM C [svm_c]");

  auto* verify = app.add_subcommand("verify-theory", "check minimax equilibrium identities numerically");
  int pairs = 1000;
  std::uint64_t theory_seed = 1;
  verify->add_option("--pairs", pairs, "number of random distribution pairs")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--seed", theory_seed, "seed for the random pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (verify->parsed()) return run_verify_theory(pairs, theory_seed);

    RunConfig cfg;
    if (synth->parsed()) {
      cfg = synth_common.build();
      if (synth_preset->count()) cfg.preset = preset;
      if (synth_size->count()) cfg.image_size = size;
      if (synth_n->count()) cfg.n_per_class = n_per_class;
      return run_synth(cfg);
    }
    if (train->parsed()) {
      cfg = train_common.build();
      if (train_data->count()) cfg.data_dir = data_dir;
      if (train_preset->count()) cfg.preset = preset;
      if (train_fusion->count()) cfg.fusion = fusion;
      if (train_epochs->count()) cfg.epochs = epochs;
      if (train_batch->count()) cfg.batch_size = batch;
      if (train_resume->count()) cfg.checkpoint = resume;
      return run_train(cfg);
    }
    if (sample->parsed()) {
      cfg = sample_common.build();
      if (sample_ckpt->count()) cfg.checkpoint = checkpoint;
      if (sample_preset->count()) cfg.preset = preset;
      if (sample_fusion->count()) cfg.fusion = fusion;
      if (sample_rows->count()) cfg.sample_rows = rows;
      if (sample_cols->count()) cfg.sample_cols = cols;
      return run_sample(cfg);
    }
    if (extract->parsed()) {
      cfg = extract_common.build();
      if (extract_ckpt->count()) cfg.checkpoint = checkpoint;
      if (extract_data->count()) cfg.data_dir = data_dir;
      if (extract_preset->count()) cfg.preset = preset;
      if (extract_fusion->count()) cfg.extract_fusion = fusion;
      return run_extract(cfg);
    }
    if (classify->parsed()) {
      cfg = classify_common.build();
      if (classify_features->count()) cfg.features = features;
      if (classify_k->count()) cfg.k = folds;
      if (classify_c->count()) cfg.svm_c = svm_c;
      return run_classify(cfg);
    }
    if (evaluate->parsed()) {
      cfg = evaluate_common.build();
      if (evaluate_ckpt->count()) cfg.checkpoint = checkpoint;
      if (evaluate_data->count()) cfg.data_dir = data_dir;
      if (evaluate_preset->count()) cfg.preset = preset;
      if (evaluate_fusion->count()) cfg.eval_fusions = fusions_csv;
      if (evaluate_k->count()) cfg.eval_ks = ks_csv;
      if (evaluate_c->count()) cfg.svm_c = svm_c;
      return run_evaluate(cfg);
    }
  } catch (const dcal::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const dcal::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const dcal::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
