#include "dcal/models.hpp"

#include <stdexcept>

namespace dcal::models {

std::string to_string(Preset p) {
  return p == Preset::paper ? "paper" : "desk";
}

std::string to_string(Fusion f) {
  switch (f) {
    case Fusion::F1: return "F1";
    case Fusion::F2: return "F2";
    default: return "F3";
  }
}

Preset preset_from_string(const std::string& s) {
  if (s == "paper") return Preset::paper;
  if (s == "desk") return Preset::desk;
  throw ConfigError("unknown preset '" + s + "' (expected paper|desk)");
}

Fusion fusion_from_string(const std::string& s) {
  if (s == "F1" || s == "f1") return Fusion::F1;
  if (s == "F2" || s == "f2") return Fusion::F2;
  if (s == "F3" || s == "f3") return Fusion::F3;
  throw ConfigError("unknown fusion mode '" + s + "' (expected F1|F2|F3)");
}

NetworkConfig NetworkConfig::paper_preset() {
  NetworkConfig c;
  c.preset = Preset::paper;
  c.image_size = 512;
  c.z_dim = 100;
  // 4x4 projection then seven doubling stages: 4->8->...->512.
  c.gen_stages = {
      {1024, 4, 1, Pad2d(0), true},
      {512, 4, 2, Pad2d(1), true},
      {256, 4, 2, Pad2d(1), true},
      {128, 4, 2, Pad2d(1), true},
      {64, 4, 2, Pad2d(1), true},
      {32, 4, 2, Pad2d(1), true},
      {16, 4, 2, Pad2d(1), true},
      {1, 4, 2, Pad2d(1), false},
  };
  // The asymmetric conv1 padding makes 512 -> 128 exact at stride 4.
  c.disc_layers = {
      {96, 11, 4, Pad2d(3, 4, 3, 4), true, {3, 2, 1}, false},
      {256, 5, 1, Pad2d(2), true, {3, 2, 1}, true},
      {384, 3, 1, Pad2d(1), false, {}, true},
      {384, 3, 1, Pad2d(1), false, {}, true},
      {256, 5, 1, Pad2d(2), true, {3, 2, 1}, true},
  };
  c.fusion_mode = Fusion::F3;
  c.leaky_alpha = 0.2;
  return c;
}

NetworkConfig NetworkConfig::desk_preset() {
  NetworkConfig c;
  c.preset = Preset::desk;
  c.image_size = 64;
  c.z_dim = 100;
  c.gen_stages = {
      {256, 4, 1, Pad2d(0), true},
      {128, 4, 2, Pad2d(1), true},
      {64, 4, 2, Pad2d(1), true},
      {32, 4, 2, Pad2d(1), true},
      {1, 4, 2, Pad2d(1), false},
  };
  c.disc_layers = {
      {32, 5, 2, Pad2d(2), true, {3, 2, 1}, false},
      {64, 5, 1, Pad2d(2), true, {3, 2, 1}, true},
      {96, 3, 1, Pad2d(1), false, {}, true},
      {96, 3, 1, Pad2d(1), false, {}, true},
      {64, 5, 1, Pad2d(2), true, {3, 2, 1}, true},
  };
  c.fusion_mode = Fusion::F3;
  c.leaky_alpha = 0.2;
  return c;
}

NetworkConfig NetworkConfig::from_preset(Preset p) {
  return p == Preset::paper ? paper_preset() : desk_preset();
}

namespace {

struct LayerShape {
  std::int64_t channels;
  std::int64_t side;
};

std::vector<LayerShape> shape_walk(const NetworkConfig& config) {
  std::vector<LayerShape> shapes;
  std::int64_t side = config.image_size;
  for (const auto& l : config.disc_layers) {
    side = nn::conv_out_dim(side, l.kernel, l.stride, l.pad.top, l.pad.bottom);
    if (l.has_pool) {
      side = nn::conv_out_dim(side, l.pool.window, l.pool.stride, l.pool.pad,
                              l.pool.pad);
    }
    shapes.push_back({l.out_channels, side});
  }
  return shapes;
}

}  // namespace

std::int64_t final_feature_side(const NetworkConfig& config) {
  return shape_walk(config).back().side;
}

std::int64_t fused_dim(const NetworkConfig& config, Fusion mode) {
  const auto shapes = shape_walk(config);
  const std::size_t depth =
      mode == Fusion::F1 ? 1 : (mode == Fusion::F2 ? 2 : 3);
  if (shapes.size() < depth) {
    throw ConfigError("fused_dim: fewer discriminator layers than fusion depth");
  }
  const std::int64_t side = shapes.back().side;
  std::int64_t total = 0;
  for (std::size_t d = 0; d < depth; ++d) {
    total += shapes[shapes.size() - 1 - d].channels * side * side;
  }
  return total;
}

}  // namespace dcal::models
