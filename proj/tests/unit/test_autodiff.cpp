#include <cmath>
#include <stdexcept>
#include <vector>

#include "dcal/autodiff.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace ad = dcal::ad;
using dcal::Tensor4;
using Var = ad::Var<double>;

namespace {

Var scalar_leaf(double v) {
  return Var::leaf(Tensor4<double>::scalar(v), true);
}

}  // namespace

TEST_CASE("autodiff: elementwise op values") {
  auto a = Var::constant(testutil::image<double>(1, 3, {1.0, -2.0, 3.0}));
  auto b = Var::constant(testutil::image<double>(1, 3, {0.5, 4.0, -1.0}));

  CHECK(ad::add(a, b).value().values == std::vector<double>{1.5, 2.0, 2.0});
  CHECK(ad::sub(a, b).value().values == std::vector<double>{0.5, -6.0, 4.0});
  CHECK(ad::mul(a, b).value().values == std::vector<double>{0.5, -8.0, -3.0});
  CHECK(ad::neg(a).value().values == std::vector<double>{-1.0, 2.0, -3.0});
  CHECK(ad::scalar_affine(a, 2.0, 1.0).value().values ==
        std::vector<double>{3.0, -3.0, 7.0});
  CHECK(ad::square(a).value().values == std::vector<double>{1.0, 4.0, 9.0});
  CHECK(ad::clamp(a, -1.5, 2.0).value().values ==
        std::vector<double>{1.0, -1.5, 2.0});

  auto logx = ad::log(Var::constant(testutil::image<double>(1, 2, {1.0, std::exp(2.0)})));
  CHECK(logx.value().values[0] == doctest::Approx(0.0));
  CHECK(logx.value().values[1] == doctest::Approx(2.0));

  auto sq = ad::sqrt(Var::constant(testutil::image<double>(1, 2, {4.0, 9.0})));
  CHECK(sq.value().values == std::vector<double>{2.0, 3.0});
}

TEST_CASE("autodiff: reductions") {
  auto x = Var::constant(Tensor4<double>({2, 1, 1, 2}, {1.0, 2.0, 3.0, 5.0}));
  CHECK(ad::sum_all(x).item() == 11.0);
  CHECK(ad::mean_all(x).item() == doctest::Approx(2.75));
  CHECK(ad::l2_norm(x).item() == doctest::Approx(std::sqrt(1 + 4 + 9 + 25)));

  auto mb = ad::mean_batch(x);
  CHECK(mb.dims() == dcal::Dims4{1, 1, 1, 2});
  CHECK(mb.value().values[0] == doctest::Approx(2.0));  // mean(1,3)
  CHECK(mb.value().values[1] == doctest::Approx(3.5));  // mean(2,5)
}

TEST_CASE("autodiff: concat_channels and flatten_spatial") {
  auto a = Var::constant(Tensor4<double>({1, 2, 1, 1}, {1.0, 2.0}));
  auto b = Var::constant(Tensor4<double>({1, 1, 1, 1}, {9.0}));
  auto cat = ad::concat_channels(std::vector<Var>{a, b});
  CHECK(cat.dims() == dcal::Dims4{1, 3, 1, 1});
  CHECK(cat.value().values == std::vector<double>{1.0, 2.0, 9.0});

  auto x = Var::constant(Tensor4<double>({1, 2, 2, 2},
                                         {1, 2, 3, 4, 5, 6, 7, 8}));
  auto flat = ad::flatten_spatial(x);
  CHECK(flat.dims() == dcal::Dims4{1, 8, 1, 1});
  CHECK(flat.value().values == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("autodiff: fan-out accumulates gradients") {
  // y = x*x + x at x = 3: y = 12, dy/dx = 2x + 1 = 7.
  auto x = scalar_leaf(3.0);
  auto y = ad::add(ad::mul(x, x), x);
  CHECK(y.item() == 12.0);
  ad::backward(y);
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("autodiff: chain rule through composed ops") {
  // f(x) = log(clamp(x^2, 0.5, 100)) at x = 2 -> log(4), df/dx = 2/x = 1.
  auto x = scalar_leaf(2.0);
  auto f = ad::log(ad::clamp(ad::square(x), 0.5, 100.0));
  CHECK(f.item() == doctest::Approx(std::log(4.0)));
  ad::backward(f);
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("autodiff: clamp blocks gradient outside the interval") {
  auto x = scalar_leaf(5.0);
  auto y = ad::clamp(x, -1.0, 1.0);  // clamped at hi
  ad::backward(y);
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("autodiff: sqrt subgradient at zero is zero") {
  auto x = scalar_leaf(0.0);
  auto y = ad::sqrt(x);
  ad::backward(y);
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("autodiff: leaf grads accumulate across separate graphs") {
  auto x = scalar_leaf(4.0);
  auto y1 = ad::scalar_affine(x, 3.0, 0.0);
  ad::backward(y1);
  CHECK(x.grad()[0] == doctest::Approx(3.0));
  auto y2 = ad::scalar_affine(x, 10.0, 0.0);
  ad::backward(y2);
  CHECK(x.grad()[0] == doctest::Approx(13.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("autodiff: backward error paths") {
  auto x = scalar_leaf(1.0);
  auto vec = Var::leaf(testutil::image<double>(1, 2, {1.0, 2.0}), true);

  // Non-scalar root.
  auto y = ad::square(vec);
  CHECK_THROWS_AS(ad::backward(y), std::logic_error);

  // Second backward through a consumed interior node.
  auto z = ad::square(x);
  ad::backward(z);
  CHECK_THROWS_AS(ad::backward(z), std::logic_error);

  // grad() before any backward.
  auto fresh = scalar_leaf(2.0);
  CHECK_THROWS_AS(fresh.grad(), std::logic_error);

  // item() on a non-scalar.
  CHECK_THROWS_AS(vec.item(), std::logic_error);
}

TEST_CASE("autodiff: NoGradScope disables graph recording") {
  auto x = scalar_leaf(2.0);
  CHECK(ad::recording());
  {
    ad::NoGradScope guard;
    CHECK(!ad::recording());
    auto y = ad::square(x);
    CHECK(y.item() == 4.0);
    CHECK(!y.requires_grad());
  }
  CHECK(ad::recording());
}

TEST_CASE("autodiff: ops on constants produce constants") {
  auto c = Var::constant(Tensor4<double>::scalar(3.0));
  auto y = ad::square(c);
  CHECK(!y.requires_grad());
}

TEST_CASE("autodiff: detach stops gradient flow") {
  auto x = scalar_leaf(3.0);
  // y = x * detach(x): treats the second factor as a constant, dy/dx = 3.
  auto y = ad::mul(x, x.detach());
  CHECK(y.item() == 9.0);
  ad::backward(y);
  CHECK(x.grad()[0] == doctest::Approx(3.0));
}
