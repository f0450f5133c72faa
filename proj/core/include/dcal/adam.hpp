#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dcal/autodiff.hpp"
#include "dcal/errors.hpp"

namespace dcal::opt {

template <typename T>
struct AdamConfig {
  T lr = T(0.0002);
  T beta1 = T(0.5);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

/// First/second-moment slots, one pair per attached parameter tensor.
template <typename T>
struct AdamState {
  std::int64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

struct StepOutcome {
  bool applied = true;
  std::string note;  // set when skipped (which parameter, why)
};

/// Adam with bias correction over a fixed list of parameter Vars. A step with
/// zero gradients on a fresh state leaves parameters bit-identical. Any
/// non-finite gradient entry skips the whole step (state untouched) and
/// reports which parameter tripped.
template <typename T>
class Adam {
public:
  Adam(std::vector<ad::Var<T>> params, AdamConfig<T> config)
      : params_(std::move(params)), config_(config) {
    state_.m.resize(params_.size());
    state_.v.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto n = params_[i].value().values.size();
      state_.m[i].assign(n, T(0));
      state_.v[i].assign(n, T(0));
    }
  }

  const AdamConfig<T>& config() const { return config_; }
  AdamState<T>& state() { return state_; }
  const AdamState<T>& state() const { return state_; }
  const std::vector<ad::Var<T>>& params() const { return params_; }

  StepOutcome step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& t = params_[i].value();
      if (!t.grad) continue;  // untouched by backward: zero gradient
      if (t.grad->size() != t.values.size()) {
        throw std::logic_error("Adam: gradient/value size mismatch at param " +
                               std::to_string(i));
      }
      for (const T g : *t.grad) {
        if (!std::isfinite(g)) {
          return {false, "non-finite gradient in parameter " +
                             std::to_string(i) + "; step skipped"};
        }
      }
    }

    state_.step_count += 1;
    const auto t = static_cast<T>(state_.step_count);
    const T bc1 = T(1) - std::pow(config_.beta1, t);
    const T bc2 = T(1) - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& vals = params_[i].mutable_value().values;
      const std::vector<T>* grad =
          params_[i].value().grad ? &*params_[i].value().grad : nullptr;
      auto& m = state_.m[i];
      auto& v = state_.v[i];
      for (std::size_t j = 0; j < vals.size(); ++j) {
        const T g = grad ? (*grad)[j] : T(0);
        m[j] = config_.beta1 * m[j] + (T(1) - config_.beta1) * g;
        v[j] = config_.beta2 * v[j] + (T(1) - config_.beta2) * g * g;
        const T mhat = m[j] / bc1;
        const T vhat = v[j] / bc2;
        vals[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
    return {true, {}};
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

private:
  std::vector<ad::Var<T>> params_;
  AdamConfig<T> config_;
  AdamState<T> state_;
};

}  // namespace dcal::opt
