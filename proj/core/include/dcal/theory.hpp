#pragma once

#include <cstddef>
#include <vector>

// Numerical oracle for the minimax equilibrium algebra of adversarial
// training, on finite discrete supports: the optimal discriminator
// p_data/(p_data+p_g), the value function at that optimum, and its identity
// with 2*JSD(p_data, p_g) - ln 4. Natural logarithms throughout; 0*log(0)
// terms are 0 by convention.

namespace dcal::theory {

struct DiscreteDistribution {
  std::vector<double> probs;

  /// Validates entries >= 0 and sum == 1 within 1e-12.
  static DiscreteDistribution validated(std::vector<double> probs);
};

struct KlResult {
  double value = 0.0;
  // Set when some p_i > 0 has q_i = 0; value is +infinity then. This is a
  // signal, not an error: KL is genuinely infinite there.
  bool is_infinite = false;
};

KlResult kl_divergence(const DiscreteDistribution& p,
                       const DiscreteDistribution& q);

/// 0.5*KL(p||m) + 0.5*KL(q||m) with m the midpoint; always finite,
/// symmetric, in [0, ln 2].
double js_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q);

struct OptimalDiscriminator {
  std::vector<double> d;              // entries in [0,1]; excluded points hold 0.5
  std::vector<std::size_t> excluded;  // support points where p_data = p_g = 0
};

OptimalDiscriminator optimal_discriminator(const DiscreteDistribution& p_data,
                                           const DiscreteDistribution& p_g);

/// Direct evaluation of V(D*, G) = sum p_data*ln(D*) + sum p_g*ln(1-D*).
/// Postcondition (and the identity the oracle exists to pin down):
/// value_at_optimum(p, q) == 2*js_divergence(p, q) - ln 4 within 1e-12.
double value_at_optimum(const DiscreteDistribution& p_data,
                        const DiscreteDistribution& p_g);

struct MinimaxStep {
  std::vector<double> p_g;
  double v = 0.0;
};

struct MinimaxResult {
  std::vector<MinimaxStep> trajectory;  // steps+1 entries, initial state first
  double final_total_variation = 0.0;
  bool diverged = false;  // non-finite logits encountered; trajectory truncated
};

/// Toy minimax game: p_g = softmax(theta) starts uniform; each step plays the
/// closed-form best-response discriminator, records V(D*, G), then descends
/// the generator objective sum p_g*ln(1-D*) on theta. The unique fixed point
/// is p_g = p_data, where V = -ln 4.
MinimaxResult minimax_toy(const DiscreteDistribution& p_data, int steps,
                          double lr);

}  // namespace dcal::theory
