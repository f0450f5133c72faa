#include <cmath>
#include <stdexcept>
#include <vector>

#include "dcal/autodiff.hpp"
#include "dcal/losses.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace ad = dcal::ad;
namespace gan = dcal::gan;
using dcal::Tensor4;
using Var = ad::Var<double>;

namespace {

Var probs(std::vector<double> p) {
  const auto n = static_cast<std::int64_t>(p.size());
  return Var::constant(Tensor4<double>({n, 1, 1, 1}, std::move(p)));
}

}  // namespace

TEST_CASE("losses: discriminator parts at hand-picked probabilities") {
  // l_d_real = -mean(log d_real), l_d_fake = -mean(log(1 - d_fake)).
  auto parts = gan::discriminator_loss(probs({0.8, 0.7}), probs({0.3, 0.1}));
  const double want_real = -0.5 * (std::log(0.8) + std::log(0.7));
  const double want_fake = -0.5 * (std::log(0.7) + std::log(0.9));
  CHECK(parts.l_d_real.item() == doctest::Approx(want_real).epsilon(1e-12));
  CHECK(parts.l_d_fake.item() == doctest::Approx(want_fake).epsilon(1e-12));
  CHECK(parts.l_d.item() ==
        doctest::Approx(want_real + want_fake).epsilon(1e-12));
}

TEST_CASE("losses: an undecided discriminator sits at 2 ln 2") {
  auto parts = gan::discriminator_loss(probs({0.5, 0.5}), probs({0.5, 0.5}));
  CHECK(parts.l_d.item() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(parts.l_d_real.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("losses: generator image term is the non-saturating form") {
  auto fused = Var::constant(Tensor4<double>({1, 2, 1, 1}, {0.0, 0.0}));
  auto parts = gan::generator_loss(probs({0.5}), fused, fused);
  CHECK(parts.l_g_image.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(parts.l_g_feature.item() == doctest::Approx(0.0));
  CHECK(parts.l_g.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("losses: feature term is the norm of batch-mean differences") {
  // Real batch means (1, 0); fake batch means (0, 1); distance sqrt(2).
  auto real = Var::constant(Tensor4<double>({2, 2, 1, 1}, {2.0, 0.0, 0.0, 0.0}));
  auto fake = Var::constant(Tensor4<double>({2, 2, 1, 1}, {0.0, 1.0, 0.0, 1.0}));
  auto parts = gan::generator_loss(probs({0.5}), real, fake);
  CHECK(parts.l_g_feature.item() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(parts.l_g.item() ==
        doctest::Approx(std::log(2.0) + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("losses: probability clamp keeps saturated values finite") {
  auto parts = gan::discriminator_loss(probs({1.0}), probs({1.0}));
  CHECK(std::isfinite(parts.l_d.item()));
  // log(1e-7) bounds the fake term at ~16.1.
  CHECK(parts.l_d_fake.item() ==
        doctest::Approx(-std::log(gan::kProbClamp<double>)).epsilon(1e-9));
  CHECK(parts.l_d_real.item() == doctest::Approx(0.0).epsilon(1e-6));

  auto zero = gan::discriminator_loss(probs({0.0}), probs({0.0}));
  CHECK(std::isfinite(zero.l_d.item()));
}

TEST_CASE("losses: clamped probabilities pass no gradient") {
  auto d = Var::leaf(Tensor4<double>({1, 1, 1, 1}, {1.0}), true);
  auto parts = gan::discriminator_loss(d, probs({0.5}));
  ad::backward(parts.l_d);
  CHECK(d.grad()[0] == 0.0);
}

TEST_CASE("losses: empty batches and mismatched fused dims are rejected") {
  auto empty = Var::constant(Tensor4<double>({0, 1, 1, 1}));
  CHECK_THROWS_AS(gan::discriminator_loss(empty, probs({0.5})),
                  std::invalid_argument);
  CHECK_THROWS_AS(gan::generator_loss(empty, probs({0.5}), probs({0.5})),
                  std::invalid_argument);

  auto a = Var::constant(Tensor4<double>({1, 2, 1, 1}, {0.0, 0.0}));
  auto b = Var::constant(Tensor4<double>({1, 3, 1, 1}, {0.0, 0.0, 0.0}));
  CHECK_THROWS_AS(gan::generator_loss(probs({0.5}), a, b),
                  std::invalid_argument);
}
