#pragma once

#include "dcal/autodiff.hpp"

// Adversarial losses. Probabilities are clamped to [1e-7, 1-1e-7] before any
// log so every term stays finite for arbitrary parameter values; the clamp
// passes no gradient when it is active.

namespace dcal::gan {

template <typename T>
inline constexpr T kProbClamp = T(1e-7);

template <typename T>
ad::Var<T> clamp_prob(const ad::Var<T>& p) {
  return ad::clamp(p, kProbClamp<T>, T(1) - kProbClamp<T>);
}

template <typename T>
struct DiscLossParts {
  ad::Var<T> l_d_real;
  ad::Var<T> l_d_fake;
  ad::Var<T> l_d;
};

/// l_d_real = -mean(log D(x)), l_d_fake = -mean(log(1 - D(G(z)))). Minimizing
/// the sum is the discriminator's half of the minimax game (maximizing the
/// value function); a perfect discriminator drives it to ~0, and when real
/// and fake are indistinguishable at D == 1/2 it sits at 2 ln 2.
template <typename T>
DiscLossParts<T> discriminator_loss(const ad::Var<T>& d_real,
                                    const ad::Var<T>& d_fake) {
  if (d_real.value().numel() == 0 || d_fake.value().numel() == 0) {
    throw std::invalid_argument("discriminator_loss: empty batch");
  }
  DiscLossParts<T> parts;
  parts.l_d_real = ad::neg(ad::mean_all(ad::log(clamp_prob(d_real))));
  parts.l_d_fake = ad::neg(ad::mean_all(
      ad::log(ad::scalar_affine(clamp_prob(d_fake), T(-1), T(1)))));
  parts.l_d = ad::add(parts.l_d_real, parts.l_d_fake);
  return parts;
}

template <typename T>
struct GenLossParts {
  ad::Var<T> l_g_image;
  ad::Var<T> l_g_feature;
  ad::Var<T> l_g;
};

/// l_g_image = -mean(log D(G(z))) — the non-saturating form, same argmin as
/// minimizing log(1 - D(G(z))) but with usable gradients early in training.
/// l_g_feature matches batch-mean fused discriminator features of real vs
/// generated batches in Euclidean norm.
template <typename T>
GenLossParts<T> generator_loss(const ad::Var<T>& d_fake,
                               const ad::Var<T>& real_fused,
                               const ad::Var<T>& fake_fused) {
  if (d_fake.value().numel() == 0) {
    throw std::invalid_argument("generator_loss: empty batch");
  }
  if (real_fused.dims()[1] != fake_fused.dims()[1] ||
      real_fused.dims()[2] != fake_fused.dims()[2] ||
      real_fused.dims()[3] != fake_fused.dims()[3]) {
    throw std::invalid_argument(
        "generator_loss: fused feature dims mismatch " +
        dims_to_string(real_fused.dims()) + " vs " +
        dims_to_string(fake_fused.dims()));
  }
  GenLossParts<T> parts;
  parts.l_g_image = ad::neg(ad::mean_all(ad::log(clamp_prob(d_fake))));
  parts.l_g_feature =
      ad::l2_norm(ad::sub(ad::mean_batch(real_fused), ad::mean_batch(fake_fused)));
  parts.l_g = ad::add(parts.l_g_image, parts.l_g_feature);
  return parts;
}

}  // namespace dcal::gan
