#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dcal/kernels.hpp"
#include "dcal/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace nn = dcal::nn;
using dcal::Dims4;
using dcal::Pad2d;
using dcal::Rng;
using dcal::Tensor4;
using testutil::image;
using testutil::iota_image;

namespace {

Tensor4<double> random_tensor(const Dims4& dims, Rng& rng) {
  Tensor4<double> t(dims);
  for (auto& v : t.values) v = rng.uniform(-1.0, 1.0);
  return t;
}

double dot(const Tensor4<double>& a, const Tensor4<double>& b) {
  REQUIRE(same_dims(a, b));
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    s += a.values[i] * b.values[i];
  }
  return s;
}

const Tensor4<double> kOnes2x2({1, 1, 2, 2}, {1, 1, 1, 1});

}  // namespace

TEST_CASE("conv2d: 2x2 box filter over a 3x3 ramp") {
  // Windows of [[1,2,3],[4,5,6],[7,8,9]] sum to [[12,16],[24,28]].
  auto x = iota_image<double>(3, 3);
  auto out = nn::conv2d_forward(x, kOnes2x2, {0.0}, 1, Pad2d(0));
  CHECK(out.dims == Dims4{1, 1, 2, 2});
  CHECK(out.values == std::vector<double>{12, 16, 24, 28});

  auto biased = nn::conv2d_forward(x, kOnes2x2, {0.5}, 1, Pad2d(0));
  CHECK(biased.values == std::vector<double>{12.5, 16.5, 24.5, 28.5});
}

TEST_CASE("conv2d: symmetric padding grows the output") {
  auto x = iota_image<double>(3, 3);
  auto out = nn::conv2d_forward(x, kOnes2x2, {0.0}, 1, Pad2d(1));
  CHECK(out.dims == Dims4{1, 1, 4, 4});
  CHECK(out.values == std::vector<double>{1, 3, 5, 3,      //
                                          5, 12, 16, 9,    //
                                          11, 24, 28, 15,  //
                                          7, 15, 17, 9});
}

TEST_CASE("conv2d: stride 2 samples disjoint windows") {
  auto x = iota_image<double>(4, 4);
  auto out = nn::conv2d_forward(x, kOnes2x2, {0.0}, 2, Pad2d(0));
  CHECK(out.dims == Dims4{1, 1, 2, 2});
  CHECK(out.values == std::vector<double>{14, 22, 46, 54});
}

TEST_CASE("conv2d: channels sum on input, stack on output") {
  // Input channel 2 = 10x channel 1; an all-ones kernel over both channels
  // therefore yields 11x the single-channel response.
  auto single = iota_image<double>(3, 3);
  Tensor4<double> x({1, 2, 3, 3});
  for (int i = 0; i < 9; ++i) {
    x.values[i] = single.values[i];
    x.values[9 + i] = 10.0 * single.values[i];
  }
  // Output channel 2 uses 2x the kernel of channel 1.
  Tensor4<double> k({2, 2, 2, 2});
  for (int i = 0; i < 8; ++i) {
    k.values[i] = 1.0;
    k.values[8 + i] = 2.0;
  }
  auto out = nn::conv2d_forward(x, k, {0.0, 0.0}, 1, Pad2d(0));
  CHECK(out.dims == Dims4{1, 2, 2, 2});
  const std::vector<double> base{12, 16, 24, 28};
  for (int i = 0; i < 4; ++i) {
    CHECK(out.values[i] == doctest::Approx(11.0 * base[i]));
    CHECK(out.values[4 + i] == doctest::Approx(22.0 * base[i]));
  }
}

TEST_CASE("conv2d: backward kernels are exact adjoints") {
  Rng rng(101);
  const Dims4 in_dims{2, 3, 6, 5};
  const Dims4 k_dims{4, 3, 3, 3};
  const int stride = 2;
  const Pad2d pad(1, 2, 0, 1);
  auto x = random_tensor(in_dims, rng);
  auto k = random_tensor(k_dims, rng);
  auto y = nn::conv2d_forward(x, k, std::vector<double>(4, 0.0), stride, pad);
  auto g = random_tensor(y.dims, rng);

  // <conv(x; K), g> == <x, conv_backward_input(g; K)>
  auto gx = nn::conv2d_backward_input(g, k, in_dims, stride, pad);
  CHECK(dot(y, g) == doctest::Approx(dot(x, gx)).epsilon(1e-10));

  // <conv(x; K), g> == <K, conv_backward_filter(g; x)>
  auto gk = nn::conv2d_backward_filter(g, x, k_dims, stride, pad);
  CHECK(dot(y, g) == doctest::Approx(dot(k, gk)).epsilon(1e-10));

  // Bias gradient is the per-output-channel sum of g.
  auto gb = nn::conv_backward_bias(g);
  REQUIRE(gb.size() == 4);
  for (int c = 0; c < 4; ++c) {
    double s = 0;
    for (std::int64_t b = 0; b < g.dims[0]; ++b) {
      for (std::int64_t p = 0; p < g.dims[2] * g.dims[3]; ++p) {
        s += g.values[(b * 4 + c) * g.dims[2] * g.dims[3] + p];
      }
    }
    CHECK(gb[static_cast<std::size_t>(c)] == doctest::Approx(s));
  }
}

TEST_CASE("conv2d: argument validation") {
  auto x = iota_image<double>(3, 3);
  CHECK_THROWS_AS(nn::conv2d_forward(x, kOnes2x2, {0.0}, 0, Pad2d(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(nn::conv2d_forward(x, kOnes2x2, {0.0, 0.0}, 1, Pad2d(0)),
                  std::invalid_argument);
  Tensor4<double> k_wrong_cin({1, 2, 2, 2});
  CHECK_THROWS_AS(nn::conv2d_forward(x, k_wrong_cin, {0.0}, 1, Pad2d(0)),
                  std::invalid_argument);
}

TEST_CASE("conv_transpose2d: scatter of a 2x2 kernel") {
  auto x = image<double>(2, 2, {1, 2, 3, 4});
  Tensor4<double> k({1, 1, 2, 2}, {1, 2, 3, 4});

  auto s1 = nn::conv_transpose2d_forward(x, k, {0.0}, 1, Pad2d(0));
  CHECK(s1.dims == Dims4{1, 1, 3, 3});
  CHECK(s1.values == std::vector<double>{1, 4, 4, 6, 20, 16, 9, 24, 16});

  // Stride 2 lays the kernel copies out without overlap.
  auto s2 = nn::conv_transpose2d_forward(x, k, {0.0}, 2, Pad2d(0));
  CHECK(s2.dims == Dims4{1, 1, 4, 4});
  CHECK(s2.values == std::vector<double>{1, 2, 2, 4,    //
                                         3, 4, 6, 8,    //
                                         3, 6, 4, 8,    //
                                         9, 12, 12, 16});
}

TEST_CASE("conv_transpose2d: exact adjoint of conv2d") {
  // Shapes chosen so (H + padT + padB - kh) is a multiple of the stride,
  // making the two output grids line up exactly.
  Rng rng(202);
  const Dims4 in_dims{2, 2, 6, 6};
  const Dims4 k_dims{3, 2, 4, 4};  // conv view: [Cout=3, Cin=2, 4, 4]
  const int stride = 2;
  const Pad2d pad(1);
  auto x = random_tensor(in_dims, rng);
  auto k = random_tensor(k_dims, rng);

  auto y = nn::conv2d_forward(x, k, std::vector<double>(3, 0.0), stride, pad);
  CHECK(y.dims == Dims4{2, 3, 3, 3});
  auto g = random_tensor(y.dims, rng);

  // convT view of the same array: [Cin=3, Cout=2, 4, 4].
  auto xt = nn::conv_transpose2d_forward(g, k, std::vector<double>(2, 0.0),
                                         stride, pad);
  CHECK(xt.dims == in_dims);
  CHECK(dot(y, g) == doctest::Approx(dot(x, xt)).epsilon(1e-10));
}

TEST_CASE("conv_transpose2d: backward kernels are exact adjoints") {
  Rng rng(303);
  const Dims4 in_dims{2, 3, 4, 5};
  const Dims4 k_dims{3, 2, 4, 4};  // [Cin, Cout, kh, kw]
  const int stride = 2;
  const Pad2d pad(1, 0, 2, 1);
  auto x = random_tensor(in_dims, rng);
  auto k = random_tensor(k_dims, rng);
  auto y = nn::conv_transpose2d_forward(x, k, std::vector<double>(2, 0.0),
                                        stride, pad);
  auto g = random_tensor(y.dims, rng);

  auto gx = nn::conv_transpose2d_backward_input(g, k, in_dims, stride, pad);
  CHECK(dot(y, g) == doctest::Approx(dot(x, gx)).epsilon(1e-10));

  auto gk = nn::conv_transpose2d_backward_filter(g, x, k_dims, stride, pad);
  CHECK(dot(y, g) == doctest::Approx(dot(k, gk)).epsilon(1e-10));
}

TEST_CASE("maxpool: 3x3 window, stride 2, no padding") {
  auto x = iota_image<double>(5, 5);
  auto res = nn::maxpool_forward(x, 3, 2, 0);
  CHECK(res.output.dims == Dims4{1, 1, 2, 2});
  CHECK(res.output.values == std::vector<double>{13, 15, 23, 25});
  CHECK(res.argmax == std::vector<std::int64_t>{12, 14, 22, 24});
}

TEST_CASE("maxpool: padding is treated as minus infinity") {
  auto x = iota_image<double>(5, 5);
  auto res = nn::maxpool_forward(x, 3, 2, 1);
  CHECK(res.output.dims == Dims4{1, 1, 3, 3});
  CHECK(res.output.values ==
        std::vector<double>{7, 9, 10, 17, 19, 20, 22, 24, 25});
}

TEST_CASE("maxpool: backward routes only to argmax positions") {
  auto x = iota_image<double>(5, 5);
  auto res = nn::maxpool_forward(x, 3, 2, 0);
  Tensor4<double> g({1, 1, 2, 2}, {10, 20, 30, 40});
  auto gin = nn::maxpool_backward(g, res.argmax, x.dims);
  std::vector<double> want(25, 0.0);
  want[12] = 10;
  want[14] = 20;
  want[22] = 30;
  want[24] = 40;
  CHECK(gin.values == want);
}

TEST_CASE("maxpool: one pixel can win several overlapping windows") {
  std::vector<double> v(9, 0.0);
  v[4] = 100.0;  // center dominates every 3x3 window at stride 1, pad 1
  auto x = image<double>(3, 3, std::move(v));
  auto res = nn::maxpool_forward(x, 3, 1, 1);
  CHECK(res.output.dims == Dims4{1, 1, 3, 3});
  for (double o : res.output.values) CHECK(o == 100.0);
  for (std::int64_t a : res.argmax) CHECK(a == 4);

  Tensor4<double> g({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  auto gin = nn::maxpool_backward(g, res.argmax, x.dims);
  CHECK(gin.values[4] == 9.0);
  double total = 0;
  for (double d : gin.values) total += d;
  CHECK(total == 9.0);
}

TEST_CASE("maxpool: ties resolve to the first scanned position") {
  auto x = image<double>(2, 2, {5, 5, 5, 5});
  auto res = nn::maxpool_forward(x, 2, 2, 0);
  CHECK(res.output.values == std::vector<double>{5});
  CHECK(res.argmax == std::vector<std::int64_t>{0});
}

TEST_CASE("maxpool: rejects windows that never touch the input") {
  auto x = image<double>(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(nn::maxpool_forward(x, 2, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(nn::maxpool_forward(x, 0, 1, 0), std::invalid_argument);
}

TEST_CASE("batchnorm train: hand-checked statistics and running update") {
  // Values {1,2,3,4} in one channel: mean 2.5, biased var 1.25.
  Tensor4<double> x({2, 1, 1, 2}, {1, 2, 3, 4});
  std::vector<double> gamma{2.0}, beta{1.0};
  std::vector<double> rm{0.0}, rv{1.0};
  const double momentum = 0.9, eps = 1e-5;
  nn::BatchNormCache<double> cache;
  auto out =
      nn::batchnorm_forward_train(x, gamma, beta, rm, rv, momentum, eps, &cache);

  const double inv_std = 1.0 / std::sqrt(1.25 + eps);
  for (int i = 0; i < 4; ++i) {
    const double xhat = (x.values[i] - 2.5) * inv_std;
    CHECK(out.values[i] == doctest::Approx(2.0 * xhat + 1.0).epsilon(1e-12));
    CHECK(cache.xhat[i] == doctest::Approx(xhat).epsilon(1e-12));
  }
  CHECK(cache.inv_std[0] == doctest::Approx(inv_std).epsilon(1e-12));
  CHECK(cache.count == 4);

  // running = momentum * running + (1 - momentum) * batch stat,
  // with the variance stored unbiased (n/(n-1) correction).
  CHECK(rm[0] == doctest::Approx(0.1 * 2.5).epsilon(1e-12));
  CHECK(rv[0] == doctest::Approx(0.9 * 1.0 + 0.1 * (1.25 * 4.0 / 3.0))
                     .epsilon(1e-12));

  CHECK_THROWS_AS(
      nn::batchnorm_forward_train<double>(Tensor4<double>({1, 1, 1, 2}, {1, 2}), gamma,
                                  beta, rm, rv, momentum, eps, nullptr),
      std::invalid_argument);
}

TEST_CASE("batchnorm eval: uses the running buffers verbatim") {
  Tensor4<double> x({1, 1, 1, 3}, {1, 2, 5});
  std::vector<double> gamma{3.0}, beta{-1.0};
  const std::vector<double> rm{1.0}, rv{4.0};
  const double eps = 1e-5;
  auto out = nn::batchnorm_forward_eval<double>(x, gamma, beta, rm, rv, eps, nullptr);
  for (int i = 0; i < 3; ++i) {
    const double want = 3.0 * (x.values[i] - 1.0) / std::sqrt(4.0 + eps) - 1.0;
    CHECK(out.values[i] == doctest::Approx(want).epsilon(1e-12));
  }

  const std::vector<double> bad_rv{0.0};
  CHECK_THROWS_AS(
      nn::batchnorm_forward_eval<double>(x, gamma, beta, rm, bad_rv, eps, nullptr),
      std::invalid_argument);
}

TEST_CASE("batchnorm backward: parameter gradients are xhat-weighted sums") {
  Rng rng(404);
  auto x = random_tensor({3, 2, 2, 2}, rng);
  std::vector<double> gamma{1.5, -0.5}, beta{0.2, 0.0};
  std::vector<double> rm(2, 0.0), rv(2, 1.0);
  nn::BatchNormCache<double> cache;
  nn::batchnorm_forward_train(x, gamma, beta, rm, rv, 0.9, 1e-5, &cache);

  auto g = random_tensor(x.dims, rng);
  std::vector<double> dgamma(2, 0.0), dbeta(2, 0.0);
  nn::batchnorm_backward(g, gamma, cache, dgamma, dbeta);

  for (int c = 0; c < 2; ++c) {
    double want_dg = 0, want_db = 0;
    for (std::int64_t b = 0; b < 3; ++b) {
      for (std::int64_t p = 0; p < 4; ++p) {
        const std::size_t i = static_cast<std::size_t>((b * 2 + c) * 4 + p);
        want_dg += g.values[i] * cache.xhat[i];
        want_db += g.values[i];
      }
    }
    CHECK(dgamma[static_cast<std::size_t>(c)] ==
          doctest::Approx(want_dg).epsilon(1e-10));
    CHECK(dbeta[static_cast<std::size_t>(c)] ==
          doctest::Approx(want_db).epsilon(1e-10));
  }
}

TEST_CASE("activations: point values") {
  auto x = image<double>(1, 4, {-2.0, -0.5, 0.0, 3.0});
  auto relu = nn::act_forward(x, nn::Act::relu, 0.0);
  CHECK(relu.values == std::vector<double>{0.0, 0.0, 0.0, 3.0});

  auto leaky = nn::act_forward(x, nn::Act::leaky_relu, 0.2);
  CHECK(leaky.values[0] == doctest::Approx(-0.4));
  CHECK(leaky.values[1] == doctest::Approx(-0.1));
  CHECK(leaky.values[3] == doctest::Approx(3.0));

  auto th = nn::act_forward(x, nn::Act::tanh, 0.0);
  CHECK(th.values[3] == doctest::Approx(std::tanh(3.0)));

  auto sg = nn::act_forward(x, nn::Act::sigmoid, 0.0);
  CHECK(sg.values[2] == doctest::Approx(0.5));
  CHECK(sg.values[3] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
}

TEST_CASE("activations: derivative helpers match closed forms") {
  const std::vector<double> input{-2.0, -0.5, 0.5, 3.0};
  const std::vector<double> g(4, 1.0);

  std::vector<double> d_relu(4, 0.0);
  nn::act_backward_from_input(g, input, nn::Act::relu, 0.0, d_relu);
  CHECK(d_relu == std::vector<double>{0.0, 0.0, 1.0, 1.0});

  std::vector<double> d_leaky(4, 0.0);
  nn::act_backward_from_input(g, input, nn::Act::leaky_relu, 0.2, d_leaky);
  CHECK(d_leaky == std::vector<double>{0.2, 0.2, 1.0, 1.0});

  // tanh' = 1 - y^2 and sigmoid' = y (1 - y), both in terms of the output.
  std::vector<double> y_tanh(4), y_sig(4);
  for (int i = 0; i < 4; ++i) {
    y_tanh[static_cast<std::size_t>(i)] = std::tanh(input[static_cast<std::size_t>(i)]);
    y_sig[static_cast<std::size_t>(i)] =
        1.0 / (1.0 + std::exp(-input[static_cast<std::size_t>(i)]));
  }
  std::vector<double> d_tanh(4, 0.0), d_sig(4, 0.0);
  nn::act_backward_from_output(g, y_tanh, nn::Act::tanh, d_tanh);
  nn::act_backward_from_output(g, y_sig, nn::Act::sigmoid, d_sig);
  for (int i = 0; i < 4; ++i) {
    const auto u = static_cast<std::size_t>(i);
    CHECK(d_tanh[u] == doctest::Approx(1.0 - y_tanh[u] * y_tanh[u]));
    CHECK(d_sig[u] == doctest::Approx(y_sig[u] * (1.0 - y_sig[u])));
  }
}
