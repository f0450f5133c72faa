#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dcal/autodiff.hpp"
#include "dcal/rng.hpp"

namespace dcal::ad {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string describe() const {
    return "max_rel_err=" + std::to_string(max_rel_err) + " at param " +
           std::to_string(worst_param) + " coord " +
           std::to_string(worst_coord) + " (analytic " +
           std::to_string(worst_analytic) + ", numeric " +
           std::to_string(worst_numeric) + ", " + std::to_string(checked) +
           " coords)";
  }
};

/// Central-difference check of reverse-mode gradients. `f` must rebuild the
/// graph from the params' current values on every call and return a scalar.
/// When a parameter has more than `max_coords_per_param` entries (and the cap
/// is nonzero), a random subset of coordinates is probed. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6): the floor turns the comparison absolute for
/// vanishing gradients, where the difference quotient of an O(1) objective is
/// dominated by floating-point cancellation noise rather than by the
/// derivative itself.
template <typename T>
GradCheckReport grad_check(const std::function<Var<T>()>& f,
                           std::vector<Var<T>> params, Rng& rng,
                           T step = T(1e-4),
                           std::size_t max_coords_per_param = 0) {
  for (auto& p : params) p.zero_grad();
  {
    Var<T> root = f();
    backward(root);
  }
  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    if (p.value().grad) {
      analytic.push_back(*p.value().grad);
    } else {
      analytic.emplace_back(p.value().values.size(), T(0));
    }
  }

  GradCheckReport rep;
  NoGradScope quiet;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& vals = params[pi].mutable_value().values;
    std::vector<std::size_t> coords(vals.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords_per_param > 0 && coords.size() > max_coords_per_param) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(max_coords_per_param);
    }
    for (const std::size_t ci : coords) {
      const T saved = vals[ci];
      vals[ci] = saved + step;
      const double f_plus = static_cast<double>(f().item());
      vals[ci] = saved - step;
      const double f_minus = static_cast<double>(f().item());
      vals[ci] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * static_cast<double>(step));
      const double a = static_cast<double>(analytic[pi][ci]);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      rep.checked += 1;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = pi;
        rep.worst_coord = ci;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace dcal::ad
