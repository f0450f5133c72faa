#include "dcal/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcal::theory {

DiscreteDistribution DiscreteDistribution::validated(
    std::vector<double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("DiscreteDistribution: empty support");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument(
          "DiscreteDistribution: negative or NaN entry " + std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteDistribution: sum " +
                                std::to_string(sum) + " != 1 within 1e-12");
  }
  return DiscreteDistribution{std::move(probs)};
}

static void check_aligned(const DiscreteDistribution& p,
                          const DiscreteDistribution& q, const char* op) {
  if (p.probs.size() != q.probs.size()) {
    throw std::invalid_argument(std::string(op) + ": support size mismatch " +
                                std::to_string(p.probs.size()) + " vs " +
                                std::to_string(q.probs.size()));
  }
}

KlResult kl_divergence(const DiscreteDistribution& p,
                       const DiscreteDistribution& q) {
  check_aligned(p, q, "kl_divergence");
  KlResult r;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const double pi = p.probs[i], qi = q.probs[i];
    if (pi == 0.0) continue;  // 0*log(0/q) = 0
    if (qi == 0.0) {
      r.value = std::numeric_limits<double>::infinity();
      r.is_infinite = true;
      return r;
    }
    r.value += pi * std::log(pi / qi);
  }
  return r;
}

double js_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q) {
  check_aligned(p, q, "js_divergence");
  DiscreteDistribution m;
  m.probs.resize(p.probs.size());
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    m.probs[i] = 0.5 * (p.probs[i] + q.probs[i]);
  }
  // m dominates both p and q, so neither term can be infinite.
  const KlResult a = kl_divergence(p, m);
  const KlResult b = kl_divergence(q, m);
  return 0.5 * a.value + 0.5 * b.value;
}

OptimalDiscriminator optimal_discriminator(const DiscreteDistribution& p_data,
                                           const DiscreteDistribution& p_g) {
  check_aligned(p_data, p_g, "optimal_discriminator");
  OptimalDiscriminator out;
  out.d.resize(p_data.probs.size());
  for (std::size_t i = 0; i < p_data.probs.size(); ++i) {
    const double a = p_data.probs[i], b = p_g.probs[i];
    if (a == 0.0 && b == 0.0) {
      out.d[i] = 0.5;  // unconstrained point; value is arbitrary
      out.excluded.push_back(i);
    } else {
      out.d[i] = a / (a + b);
    }
  }
  return out;
}

double value_at_optimum(const DiscreteDistribution& p_data,
                        const DiscreteDistribution& p_g) {
  const OptimalDiscriminator opt = optimal_discriminator(p_data, p_g);
  double v = 0.0;
  for (std::size_t i = 0; i < p_data.probs.size(); ++i) {
    const double a = p_data.probs[i], b = p_g.probs[i];
    if (a > 0.0) v += a * std::log(opt.d[i]);
    if (b > 0.0) v += b * std::log(1.0 - opt.d[i]);
  }
  return v;
}

MinimaxResult minimax_toy(const DiscreteDistribution& p_data, int steps,
                          double lr) {
  if (steps < 0) throw std::invalid_argument("minimax_toy: negative steps");
  if (!(lr > 0.0)) throw std::invalid_argument("minimax_toy: lr must be > 0");
  const std::size_t n = p_data.probs.size();

  std::vector<double> theta(n, 0.0);
  auto softmax = [&theta, n]() {
    double mx = theta[0];
    for (double t : theta) mx = std::max(mx, t);
    std::vector<double> p(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::exp(theta[i] - mx);
      sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
  };

  MinimaxResult res;
  res.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  for (int step = 0; step <= steps; ++step) {
    for (double t : theta) {
      if (!std::isfinite(t)) {
        res.diverged = true;
        break;
      }
    }
    if (res.diverged) break;

    const DiscreteDistribution p_g{softmax()};
    res.trajectory.push_back({p_g.probs, value_at_optimum(p_data, p_g)});
    if (step == steps) break;

    // Best-response D is implicit in value_at_optimum; the generator descends
    // L(theta) = sum_i p_g_i * ln(1 - D*_i) with D* frozen. Through the
    // softmax Jacobian: dL/dtheta_k = p_k * (s_k - sum_i p_i * s_i), with
    // s_i = ln(1 - D*_i) = ln(p_g_i) - ln(p_data_i + p_g_i).
    const OptimalDiscriminator opt = optimal_discriminator(p_data, p_g);
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double one_minus_d = 1.0 - opt.d[i];
      // p_g_i > 0 always under softmax, so 1 - D* > 0 everywhere.
      s[i] = std::log(one_minus_d);
    }
    double mean_s = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_s += p_g.probs[i] * s[i];
    for (std::size_t k = 0; k < n; ++k) {
      theta[k] -= lr * p_g.probs[k] * (s[k] - mean_s);
    }
  }

  if (!res.trajectory.empty()) {
    const auto& last = res.trajectory.back().p_g;
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      tv += std::abs(last[i] - p_data.probs[i]);
    }
    res.final_total_variation = 0.5 * tv;
  }
  return res;
}

}  // namespace dcal::theory
