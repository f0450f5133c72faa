#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/adam.hpp"
#include "dcal/autodiff.hpp"
#include "dcal/errors.hpp"
#include "dcal/ops.hpp"
#include "dcal/rng.hpp"

namespace dcal::models {

enum class Preset { paper, desk };
enum class Fusion { F1, F2, F3 };

std::string to_string(Preset p);
std::string to_string(Fusion f);
Preset preset_from_string(const std::string& s);
Fusion fusion_from_string(const std::string& s);

struct PoolSpec {
  int window = 3;
  int stride = 2;
  int pad = 1;
};

struct DiscLayerSpec {
  std::int64_t out_channels;
  int kernel;
  int stride;
  Pad2d pad;
  bool has_pool = false;
  PoolSpec pool;
  bool has_bn = false;
};

/// Generator stage; stage 0 is the z projection (stride 1, no padding), the
/// rest are spatial doublers. The last stage ends in tanh instead of
/// batchnorm+relu.
struct GenStageSpec {
  std::int64_t out_channels;
  int kernel;
  int stride;
  Pad2d pad;
  bool bn_relu = true;
};

struct NetworkConfig {
  Preset preset = Preset::desk;
  std::int64_t image_size = 64;
  std::int64_t z_dim = 100;
  std::vector<GenStageSpec> gen_stages;
  std::vector<DiscLayerSpec> disc_layers;
  Fusion fusion_mode = Fusion::F3;
  double leaky_alpha = 0.2;

  static NetworkConfig paper_preset();
  static NetworkConfig desk_preset();
  static NetworkConfig from_preset(Preset p);
};

/// Spatial side length of the last discriminator layer's feature map.
std::int64_t final_feature_side(const NetworkConfig& config);

/// Flattened fused-feature length for a fusion mode; layers below the final
/// one are counted at the final layer's spatial size.
std::int64_t fused_dim(const NetworkConfig& config, Fusion mode);

template <typename T>
struct LayerParams {
  ad::Var<T> kernels;
  ad::Var<T> bias;
  bool has_bn = false;
  ad::Var<T> bn_gamma;
  ad::Var<T> bn_beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
};

/// Named view of one parameter/state array, used for checkpointing and
/// fingerprints. `data` points into the owning GanParams.
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* data;
  bool trainable;
};

template <typename T>
struct GanParams {
  std::vector<LayerParams<T>> gen;
  std::vector<LayerParams<T>> disc;
  ad::Var<T> head_w;  // [1, fused_dim, 1, 1]
  ad::Var<T> head_b;  // [1, 1, 1, 1]

  std::vector<ParamRef<T>> walk();
  std::vector<ad::Var<T>> generator_trainables() const;
  std::vector<ad::Var<T>> discriminator_trainables() const;
};

template <typename T>
GanParams<T> init_params(const NetworkConfig& config, std::uint64_t seed);

/// Uniform(-1,1) latent batch, shaped [batch, z_dim, 1, 1].
template <typename T>
Tensor4<T> sample_z(Rng& rng, std::int64_t batch, std::int64_t z_dim);

template <typename T>
ad::Var<T> generator_forward(GanParams<T>& params, const NetworkConfig& config,
                             const ad::Var<T>& z, bool training);

template <typename T>
struct DiscOutput {
  ad::Var<T> prob;                       // [B,1,1,1], strictly in (0,1)
  std::vector<ad::Var<T>> features;      // post-activation/post-pool, layer 1..n
  ad::Var<T> fused;                      // [B, fused_dim(config.fusion_mode), 1, 1]
};

template <typename T>
DiscOutput<T> discriminator_forward(GanParams<T>& params,
                                    const NetworkConfig& config,
                                    const ad::Var<T>& x, bool training);

/// Downsample the contributing layers to the final spatial grid
/// (non-overlapping max-pool), concatenate channels deepest-first, flatten.
/// F1 is a strict prefix of F2, F2 of F3.
template <typename T>
ad::Var<T> fuse_features(const std::vector<ad::Var<T>>& features,
                         const NetworkConfig& config, Fusion mode);

/// FNV-1a over the raw bytes of every trainable array, in walk order.
template <typename T>
std::uint64_t params_fingerprint(GanParams<T>& params);

// --- implementation ---------------------------------------------------------

template <typename T>
std::vector<ParamRef<T>> GanParams<T>::walk() {
  std::vector<ParamRef<T>> out;
  auto push_layer = [&out](const std::string& prefix, LayerParams<T>& l) {
    out.push_back({prefix + ".kernels", &l.kernels.mutable_value().values, true});
    out.push_back({prefix + ".bias", &l.bias.mutable_value().values, true});
    if (l.has_bn) {
      out.push_back(
          {prefix + ".bn_gamma", &l.bn_gamma.mutable_value().values, true});
      out.push_back(
          {prefix + ".bn_beta", &l.bn_beta.mutable_value().values, true});
      out.push_back({prefix + ".running_mean", &l.running_mean, false});
      out.push_back({prefix + ".running_var", &l.running_var, false});
    }
  };
  for (std::size_t i = 0; i < gen.size(); ++i) {
    push_layer("gen" + std::to_string(i), gen[i]);
  }
  for (std::size_t i = 0; i < disc.size(); ++i) {
    push_layer("disc" + std::to_string(i + 1), disc[i]);
  }
  out.push_back({"head.w", &head_w.mutable_value().values, true});
  out.push_back({"head.b", &head_b.mutable_value().values, true});
  return out;
}

template <typename T>
std::vector<ad::Var<T>> GanParams<T>::generator_trainables() const {
  std::vector<ad::Var<T>> out;
  for (const auto& l : gen) {
    out.push_back(l.kernels);
    out.push_back(l.bias);
    if (l.has_bn) {
      out.push_back(l.bn_gamma);
      out.push_back(l.bn_beta);
    }
  }
  return out;
}

template <typename T>
std::vector<ad::Var<T>> GanParams<T>::discriminator_trainables() const {
  std::vector<ad::Var<T>> out;
  for (const auto& l : disc) {
    out.push_back(l.kernels);
    out.push_back(l.bias);
    if (l.has_bn) {
      out.push_back(l.bn_gamma);
      out.push_back(l.bn_beta);
    }
  }
  out.push_back(head_w);
  out.push_back(head_b);
  return out;
}

namespace detail {

template <typename T>
Tensor4<T> normal_tensor(Rng& rng, const Dims4& dims, double mean,
                         double stddev) {
  Tensor4<T> t(dims);
  for (auto& v : t.values) v = static_cast<T>(rng.normal(mean, stddev));
  return t;
}

template <typename T>
LayerParams<T> init_layer(Rng& rng, const Dims4& kernel_dims,
                          std::int64_t out_channels, bool has_bn) {
  LayerParams<T> l;
  l.kernels = ad::Var<T>::leaf(normal_tensor<T>(rng, kernel_dims, 0.0, 0.02),
                               true);
  l.bias = ad::Var<T>::leaf(Tensor4<T>({1, out_channels, 1, 1}), true);
  l.has_bn = has_bn;
  if (has_bn) {
    l.bn_gamma = ad::Var<T>::leaf(
        normal_tensor<T>(rng, {1, out_channels, 1, 1}, 1.0, 0.02), true);
    l.bn_beta = ad::Var<T>::leaf(Tensor4<T>({1, out_channels, 1, 1}), true);
    l.running_mean.assign(static_cast<std::size_t>(out_channels), T(0));
    l.running_var.assign(static_cast<std::size_t>(out_channels), T(1));
  }
  return l;
}

}  // namespace detail

template <typename T>
GanParams<T> init_params(const NetworkConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  GanParams<T> p;
  std::int64_t in_c = config.z_dim;
  for (const auto& s : config.gen_stages) {
    // Transposed-conv kernels are stored [Cin, Cout, kh, kw].
    p.gen.push_back(detail::init_layer<T>(
        rng, {in_c, s.out_channels, s.kernel, s.kernel}, s.out_channels,
        s.bn_relu));
    in_c = s.out_channels;
  }
  in_c = 1;
  for (const auto& s : config.disc_layers) {
    p.disc.push_back(detail::init_layer<T>(
        rng, {s.out_channels, in_c, s.kernel, s.kernel}, s.out_channels,
        s.has_bn));
    in_c = s.out_channels;
  }
  const std::int64_t d = fused_dim(config, config.fusion_mode);
  p.head_w = ad::Var<T>::leaf(
      detail::normal_tensor<T>(rng, {1, d, 1, 1}, 0.0, 0.02), true);
  p.head_b = ad::Var<T>::leaf(Tensor4<T>({1, 1, 1, 1}), true);
  return p;
}

template <typename T>
Tensor4<T> sample_z(Rng& rng, std::int64_t batch, std::int64_t z_dim) {
  Tensor4<T> z({batch, z_dim, 1, 1});
  for (auto& v : z.values) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return z;
}

template <typename T>
ad::Var<T> generator_forward(GanParams<T>& params, const NetworkConfig& config,
                             const ad::Var<T>& z, bool training) {
  const auto& zd = z.dims();
  if (zd[1] != config.z_dim || zd[2] != 1 || zd[3] != 1) {
    throw std::invalid_argument("generator_forward: z must be [B," +
                                std::to_string(config.z_dim) + ",1,1], got " +
                                dims_to_string(zd));
  }
  if (params.gen.size() != config.gen_stages.size()) {
    throw std::invalid_argument("generator_forward: params/config mismatch");
  }
  ad::Var<T> x = z;
  for (std::size_t i = 0; i < config.gen_stages.size(); ++i) {
    const auto& s = config.gen_stages[i];
    auto& l = params.gen[i];
    x = ad::conv_transpose2d(x, l.kernels, l.bias, s.stride, s.pad);
    if (s.bn_relu) {
      x = ad::batchnorm(x, l.bn_gamma, l.bn_beta, l.running_mean,
                        l.running_var, T(0.9), T(1e-5), training);
      x = ad::relu(x);
    } else {
      x = ad::tanh(x);
    }
  }
  if (x.dims()[2] != config.image_size || x.dims()[3] != config.image_size ||
      x.dims()[1] != 1) {
    throw std::logic_error("generator_forward: output dims " +
                           dims_to_string(x.dims()) +
                           " disagree with configured image size");
  }
  return x;
}

template <typename T>
ad::Var<T> fuse_features(const std::vector<ad::Var<T>>& features,
                         const NetworkConfig& config, Fusion mode) {
  const std::size_t n = config.disc_layers.size();
  const std::size_t depth =
      mode == Fusion::F1 ? 1 : (mode == Fusion::F2 ? 2 : 3);
  if (features.size() != n) {
    throw std::invalid_argument("fuse_features: expected " + std::to_string(n) +
                                " layer features, got " +
                                std::to_string(features.size()));
  }
  const std::int64_t side = final_feature_side(config);
  std::vector<ad::Var<T>> parts;
  for (std::size_t d = 0; d < depth; ++d) {
    ad::Var<T> f = features[n - 1 - d];
    while (f.dims()[2] > side) {
      if (f.dims()[2] % 2 != 0) {
        throw std::invalid_argument(
            "fuse_features: layer spatial size " +
            std::to_string(f.dims()[2]) +
            " cannot be halved down to final size " + std::to_string(side));
      }
      f = ad::maxpool(f, 2, 2, 0);
    }
    if (f.dims()[2] != side || f.dims()[3] != side) {
      throw std::invalid_argument("fuse_features: layer dims " +
                                  dims_to_string(f.dims()) +
                                  " incompatible with final side " +
                                  std::to_string(side));
    }
    parts.push_back(f);
  }
  return ad::flatten_spatial(depth == 1 ? parts[0] : ad::concat_channels(parts));
}

template <typename T>
DiscOutput<T> discriminator_forward(GanParams<T>& params,
                                    const NetworkConfig& config,
                                    const ad::Var<T>& x, bool training) {
  const auto& xd = x.dims();
  if (xd[1] != 1 || xd[2] != config.image_size || xd[3] != config.image_size) {
    throw std::invalid_argument(
        "discriminator_forward: input must be [B,1," +
        std::to_string(config.image_size) + "," +
        std::to_string(config.image_size) + "], got " + dims_to_string(xd));
  }
  if (params.disc.size() != config.disc_layers.size()) {
    throw std::invalid_argument("discriminator_forward: params/config mismatch");
  }
  DiscOutput<T> out;
  ad::Var<T> h = x;
  for (std::size_t i = 0; i < config.disc_layers.size(); ++i) {
    const auto& s = config.disc_layers[i];
    auto& l = params.disc[i];
    h = ad::conv2d(h, l.kernels, l.bias, s.stride, s.pad);
    if (s.has_bn) {
      h = ad::batchnorm(h, l.bn_gamma, l.bn_beta, l.running_mean,
                        l.running_var, T(0.9), T(1e-5), training);
    }
    h = ad::leaky_relu(h, static_cast<T>(config.leaky_alpha));
    if (s.has_pool) h = ad::maxpool(h, s.pool.window, s.pool.stride, s.pool.pad);
    out.features.push_back(h);
  }
  out.fused = fuse_features(out.features, config, config.fusion_mode);
  out.prob = ad::sigmoid(
      ad::conv2d(out.fused, params.head_w, params.head_b, 1, Pad2d(0)));
  if (!out.prob.value().all_finite()) {
    throw NumericError("discriminator_forward: non-finite output probability");
  }
  return out;
}

template <typename T>
std::uint64_t params_fingerprint(GanParams<T>& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t bytes) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& ref : params.walk()) {
    if (!ref.trainable) continue;
    mix(ref.data->data(), ref.data->size() * sizeof(T));
  }
  return h;
}

}  // namespace dcal::models
