#include "dcal/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcal/errors.hpp"

namespace dcal::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

void assign(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "preset") cfg.preset = value;
  else if (key == "fusion") cfg.fusion = value;
  else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
  else if (key == "epochs") cfg.epochs = parse_number<int>(key, value);
  else if (key == "lr") cfg.lr = parse_number<double>(key, value);
  else if (key == "beta1") cfg.beta1 = parse_number<double>(key, value);
  else if (key == "d_steps_per_g_step")
    cfg.d_steps_per_g_step = parse_number<int>(key, value);
  else if (key == "checkpoint_every")
    cfg.checkpoint_every = parse_number<int>(key, value);
  else if (key == "sample_grid_epochs") cfg.sample_grid_epochs = value;
  else if (key == "sample_rows") cfg.sample_rows = parse_number<int>(key, value);
  else if (key == "sample_cols") cfg.sample_cols = parse_number<int>(key, value);
  else if (key == "image_size")
    cfg.image_size = parse_number<std::int64_t>(key, value);
  else if (key == "n_per_class") cfg.n_per_class = parse_number<int>(key, value);
  else if (key == "n_pos") cfg.n_pos = parse_number<int>(key, value);
  else if (key == "n_neg") cfg.n_neg = parse_number<int>(key, value);
  else if (key == "noise_sigma")
    cfg.noise_sigma = parse_number<double>(key, value);
  else if (key == "svm_c") cfg.svm_c = parse_number<double>(key, value);
  else if (key == "k") cfg.k = parse_number<int>(key, value);
  else if (key == "extract_fusion") cfg.extract_fusion = value;
  else if (key == "eval_fusions") cfg.eval_fusions = value;
  else if (key == "eval_ks") cfg.eval_ks = value;
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "data_dir") cfg.data_dir = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "features") cfg.features = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + stripped + "'");
    }
    assign(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  assign(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void validate(const RunConfig& cfg) {
  // Throws ConfigError on unknown names.
  (void)models::preset_from_string(cfg.preset);
  (void)models::fusion_from_string(cfg.fusion);
  if (!cfg.extract_fusion.empty()) {
    (void)models::fusion_from_string(cfg.extract_fusion);
  }
  (void)parse_fusion_list(cfg.eval_fusions);
  if (cfg.batch_size < 2) {
    throw ConfigError("batch_size must be >= 2 (batchnorm needs a batch)");
  }
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(cfg.lr > 0)) throw ConfigError("lr must be > 0");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1)) {
    throw ConfigError("beta1 must be in [0, 1)");
  }
  if (cfg.d_steps_per_g_step < 1) {
    throw ConfigError("d_steps_per_g_step must be >= 1");
  }
  if (cfg.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (cfg.sample_rows < 1 || cfg.sample_cols < 1) {
    throw ConfigError("sample grid must be at least 1x1");
  }
  if (cfg.image_size < 0) throw ConfigError("image_size must be >= 0");
  if (cfg.n_per_class < 1 && (cfg.n_pos < 1 || cfg.n_neg < 1)) {
    throw ConfigError("n_per_class (or both n_pos and n_neg) must be >= 1");
  }
  if (cfg.n_pos < 0 || cfg.n_neg < 0) {
    throw ConfigError("n_pos/n_neg must be >= 0");
  }
  if (!(cfg.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(cfg.svm_c > 0)) throw ConfigError("svm_c must be > 0");
  if (cfg.k < 2) throw ConfigError("k must be >= 2");
  for (int k : parse_int_list(cfg.eval_ks)) {
    if (k < 2) throw ConfigError("eval_ks entries must be >= 2");
  }
  for (int e : parse_int_list(cfg.sample_grid_epochs)) {
    if (e < 0) throw ConfigError("sample_grid_epochs entries must be >= 0");
  }
}

std::string effective_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "preset = " << cfg.preset << "\n";
  os << "fusion = " << cfg.fusion << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "lr = " << fmt(cfg.lr) << "\n";
  os << "beta1 = " << fmt(cfg.beta1) << "\n";
  os << "d_steps_per_g_step = " << cfg.d_steps_per_g_step << "\n";
  os << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  os << "sample_grid_epochs = " << cfg.sample_grid_epochs << "\n";
  os << "sample_rows = " << cfg.sample_rows << "\n";
  os << "sample_cols = " << cfg.sample_cols << "\n";
  os << "image_size = " << cfg.image_size << "\n";
  os << "n_per_class = " << cfg.n_per_class << "\n";
  os << "n_pos = " << cfg.n_pos << "\n";
  os << "n_neg = " << cfg.n_neg << "\n";
  os << "noise_sigma = " << fmt(cfg.noise_sigma) << "\n";
  os << "svm_c = " << fmt(cfg.svm_c) << "\n";
  os << "k = " << cfg.k << "\n";
  os << "extract_fusion = " << cfg.extract_fusion << "\n";
  os << "eval_fusions = " << cfg.eval_fusions << "\n";
  os << "eval_ks = " << cfg.eval_ks << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "data_dir = " << cfg.data_dir << "\n";
  os << "checkpoint = " << cfg.checkpoint << "\n";
  os << "features = " << cfg.features << "\n";
  os << "out_dir = " << cfg.out_dir << "\n";
  return os.str();
}

std::string run_dir_name(const RunConfig& cfg) {
  const std::string hex = hex_digest(sha256(effective_config(cfg)));
  return "cfg-" + hex.substr(0, 12) + "-s" + std::to_string(cfg.seed);
}

models::NetworkConfig make_network_config(const RunConfig& cfg) {
  models::NetworkConfig net =
      models::NetworkConfig::from_preset(models::preset_from_string(cfg.preset));
  net.fusion_mode = models::fusion_from_string(cfg.fusion);
  return net;
}

gan::TrainConfig make_train_config(const RunConfig& cfg) {
  gan::TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.lr = static_cast<float>(cfg.lr);
  tc.beta1 = static_cast<float>(cfg.beta1);
  tc.d_steps_per_g_step = cfg.d_steps_per_g_step;
  tc.seed = cfg.seed;
  tc.sample_grid_epochs = parse_int_list(cfg.sample_grid_epochs);
  tc.checkpoint_every = cfg.checkpoint_every;
  tc.sample_rows = cfg.sample_rows;
  tc.sample_cols = cfg.sample_cols;
  return tc;
}

data::SynthSpec make_synth_spec(const RunConfig& cfg) {
  const std::int64_t size =
      cfg.image_size > 0 ? cfg.image_size : make_network_config(cfg).image_size;
  data::SynthSpec spec = data::SynthSpec::defaults(size, cfg.n_per_class, cfg.seed);
  spec.n_pos = cfg.n_pos;
  spec.n_neg = cfg.n_neg;
  spec.noise_sigma = cfg.noise_sigma;
  return spec;
}

std::string describe_network(const models::NetworkConfig& net) {
  std::ostringstream os;
  os << "preset=" << models::to_string(net.preset)
     << " image_size=" << net.image_size << " z_dim=" << net.z_dim
     << " fusion=" << models::to_string(net.fusion_mode)
     << " leaky_alpha=" << fmt(net.leaky_alpha) << "\n";
  for (const auto& s : net.gen_stages) {
    os << "gen out=" << s.out_channels << " k=" << s.kernel << " s=" << s.stride
       << " pad=" << s.pad.top << "," << s.pad.bottom << "," << s.pad.left
       << "," << s.pad.right << " bn_relu=" << (s.bn_relu ? 1 : 0) << "\n";
  }
  for (const auto& l : net.disc_layers) {
    os << "disc out=" << l.out_channels << " k=" << l.kernel
       << " s=" << l.stride << " pad=" << l.pad.top << "," << l.pad.bottom
       << "," << l.pad.left << "," << l.pad.right;
    if (l.has_pool) {
      os << " pool=" << l.pool.window << "," << l.pool.stride << ","
         << l.pool.pad;
    }
    os << " bn=" << (l.has_bn ? 1 : 0) << "\n";
  }
  return os.str();
}

Digest256 model_fingerprint(const RunConfig& cfg) {
  std::ostringstream os;
  os << describe_network(make_network_config(cfg));
  os << "batch_size=" << cfg.batch_size << " lr=" << fmt(cfg.lr)
     << " beta1=" << fmt(cfg.beta1)
     << " d_steps_per_g_step=" << cfg.d_steps_per_g_step << "\n";
  return sha256(os.str());
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::string item;
  std::istringstream is(csv);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<int>("list entry", item));
  }
  return out;
}

std::vector<models::Fusion> parse_fusion_list(const std::string& csv) {
  std::vector<models::Fusion> out;
  std::string item;
  std::istringstream is(csv);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(models::fusion_from_string(item));
  }
  if (out.empty()) throw ConfigError("fusion list is empty");
  return out;
}

}  // namespace dcal::config
