// Microbenchmarks for the hot paths: convolution kernels, pooling, batchnorm,
// the optimizer step, full network forwards, the SVM solver, and the
// divergence oracle. Shapes follow the desk preset so numbers reflect the
// sizes the tests and experiments actually run.

#include <benchmark/benchmark.h>

#include <vector>

#include "dcal/adam.hpp"
#include "dcal/kernels.hpp"
#include "dcal/models.hpp"
#include "dcal/rng.hpp"
#include "dcal/svm.hpp"
#include "dcal/tensor.hpp"
#include "dcal/theory.hpp"

namespace {

using dcal::Pad2d;
using dcal::Rng;
using dcal::Tensor4;

Tensor4<float> random_tensor(const dcal::Dims4& dims, Rng& rng) {
  Tensor4<float> t(dims);
  for (auto& v : t.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// Desk discriminator layer 2: 64 channels of 5x5 over 32 inputs at 16x16.
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> x = random_tensor({4, 32, 16, 16}, rng);
  const Tensor4<float> k = random_tensor({64, 32, 5, 5}, rng);
  const std::vector<float> bias(64, 0.1f);
  for (auto _ : state) {
    auto out = dcal::nn::conv2d_forward(x, k, bias, 1, Pad2d(2));
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackwardInput(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> g = random_tensor({4, 64, 16, 16}, rng);
  const Tensor4<float> k = random_tensor({64, 32, 5, 5}, rng);
  for (auto _ : state) {
    auto dx = dcal::nn::conv2d_backward_input(g, k, {4, 32, 16, 16}, 1, Pad2d(2));
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Conv2dBackwardInput);

void BM_Conv2dBackwardFilter(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> g = random_tensor({4, 64, 16, 16}, rng);
  const Tensor4<float> x = random_tensor({4, 32, 16, 16}, rng);
  for (auto _ : state) {
    auto dk = dcal::nn::conv2d_backward_filter(g, x, {64, 32, 5, 5}, 1, Pad2d(2));
    benchmark::DoNotOptimize(dk.data());
  }
}
BENCHMARK(BM_Conv2dBackwardFilter);

// Desk generator stage: 128 -> 64 channels, 8x8 -> 16x16.
void BM_ConvTransposeForward(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> x = random_tensor({4, 128, 8, 8}, rng);
  const Tensor4<float> k = random_tensor({128, 64, 4, 4}, rng);
  const std::vector<float> bias(64, 0.0f);
  for (auto _ : state) {
    auto out = dcal::nn::conv_transpose2d_forward(x, k, bias, 2, Pad2d(1));
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvTransposeForward);

void BM_MaxPoolOverlapping(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> x = random_tensor({4, 64, 32, 32}, rng);
  for (auto _ : state) {
    auto out = dcal::nn::maxpool_forward(x, 3, 2, 1);
    benchmark::DoNotOptimize(out.output.data());
  }
}
BENCHMARK(BM_MaxPoolOverlapping);

void BM_BatchNormTrain(benchmark::State& state) {
  Rng rng(1);
  const Tensor4<float> x = random_tensor({4, 64, 16, 16}, rng);
  const std::vector<float> gamma(64, 1.0f), beta(64, 0.0f);
  std::vector<float> rmean(64, 0.0f), rvar(64, 1.0f);
  dcal::nn::BatchNormCache<float> cache;
  for (auto _ : state) {
    auto out = dcal::nn::batchnorm_forward_train(x, gamma, beta, rmean, rvar,
                                                 0.9f, 1e-5f, &cache);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_BatchNormTrain);

void BM_AdamStep(benchmark::State& state) {
  Rng rng(1);
  Tensor4<float> p = random_tensor({1, 1 << 20, 1, 1}, rng);
  auto var = dcal::ad::Var<float>::leaf(std::move(p), true);
  var.mutable_value().ensure_grad();
  auto& g = *var.mutable_value().grad;
  for (auto& v : g) v = 1e-3f;
  dcal::opt::Adam<float> adam({var}, {});
  for (auto _ : state) {
    auto outcome = adam.step();
    benchmark::DoNotOptimize(outcome.applied);
  }
}
BENCHMARK(BM_AdamStep);

void BM_GeneratorForward(benchmark::State& state) {
  const auto net = dcal::models::NetworkConfig::desk_preset();
  auto params = dcal::models::init_params<float>(net, 1);
  Rng rng(2);
  dcal::ad::NoGradScope ng;
  for (auto _ : state) {
    auto z = dcal::ad::Var<float>::constant(
        dcal::models::sample_z<float>(rng, 4, net.z_dim));
    auto img = dcal::models::generator_forward(params, net, z, false);
    benchmark::DoNotOptimize(img.value().data());
  }
}
BENCHMARK(BM_GeneratorForward);

void BM_DiscriminatorForward(benchmark::State& state) {
  const auto net = dcal::models::NetworkConfig::desk_preset();
  auto params = dcal::models::init_params<float>(net, 1);
  Rng rng(2);
  const Tensor4<float> x =
      random_tensor({4, 1, net.image_size, net.image_size}, rng);
  dcal::ad::NoGradScope ng;
  for (auto _ : state) {
    auto out = dcal::models::discriminator_forward(
        params, net, dcal::ad::Var<float>::constant(x), false);
    benchmark::DoNotOptimize(out.prob.value().data());
  }
}
BENCHMARK(BM_DiscriminatorForward);

void BM_SvmTrain(benchmark::State& state) {
  Rng rng(3);
  const std::int64_t n = 100, d = 256;
  std::vector<double> x(static_cast<std::size_t>(n * d));
  std::vector<int> y(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    y[static_cast<std::size_t>(i)] = label;
    for (std::int64_t j = 0; j < d; ++j) {
      x[static_cast<std::size_t>(i * d + j)] =
          rng.normal(label * 0.5, 1.0);
    }
  }
  dcal::svm::FitOptions opts;
  opts.max_iters = 50;
  for (auto _ : state) {
    auto model = dcal::svm::svm_train(x, n, d, y, opts);
    benchmark::DoNotOptimize(model.w.data());
  }
}
BENCHMARK(BM_SvmTrain);

void BM_JsDivergence(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> p(64), q(64);
  double sp = 0, sq = 0;
  for (int i = 0; i < 64; ++i) {
    p[static_cast<std::size_t>(i)] = rng.next_double();
    q[static_cast<std::size_t>(i)] = rng.next_double();
    sp += p[static_cast<std::size_t>(i)];
    sq += q[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= sp;
  for (auto& v : q) v /= sq;
  double fix = 0;
  for (double v : p) fix += v;
  p.back() += 1.0 - fix;
  fix = 0;
  for (double v : q) fix += v;
  q.back() += 1.0 - fix;
  const auto dp = dcal::theory::DiscreteDistribution::validated(p);
  const auto dq = dcal::theory::DiscreteDistribution::validated(q);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dcal::theory::js_divergence(dp, dq));
  }
}
BENCHMARK(BM_JsDivergence);

}  // namespace

BENCHMARK_MAIN();
