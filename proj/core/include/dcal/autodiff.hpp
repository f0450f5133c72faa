#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dcal/tensor.hpp"

namespace dcal::ad {

template <typename T>
struct Node {
  Tensor4<T> value;
  bool requires_grad = false;
  // Interior nodes are single-use: a second backward pass through the same
  // node would re-accumulate stale gradients.
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  bool is_leaf() const { return parents.empty(); }

  std::vector<T>& grad_buffer() {
    value.ensure_grad();
    return *value.grad;
  }
};

/// Handle to a node in the computation graph. Copies share the node.
template <typename T>
class Var {
public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  static Var leaf(Tensor4<T> value, bool requires_grad) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  static Var constant(Tensor4<T> value) { return leaf(std::move(value), false); }

  bool valid() const { return node_ != nullptr; }
  const Tensor4<T>& value() const { return node_->value; }
  Tensor4<T>& mutable_value() { return node_->value; }
  const Dims4& dims() const { return node_->value.dims; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  const std::vector<T>& grad() const {
    if (!node_->value.grad) {
      throw std::logic_error("Var::grad: no gradient; run backward first");
    }
    return *node_->value.grad;
  }

  void zero_grad() { node_->value.zero_grad(); }

  /// Scalar convenience for [1,1,1,1] tensors.
  T item() const {
    if (node_->value.numel() != 1) {
      throw std::logic_error("Var::item: tensor is not scalar");
    }
    return node_->value.values[0];
  }

  /// New leaf sharing the value but cut off from this graph.
  Var detach() const { return constant(node_->value); }

  std::shared_ptr<Node<T>> node() const { return node_; }

private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {
inline bool& recording_flag() {
  thread_local bool recording = true;
  return recording;
}
}  // namespace detail

/// Disables graph construction within scope; ops produce constants.
class NoGradScope {
public:
  NoGradScope() : prev_(detail::recording_flag()) {
    detail::recording_flag() = false;
  }
  ~NoGradScope() { detail::recording_flag() = prev_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

private:
  bool prev_;
};

inline bool recording() { return detail::recording_flag(); }

/// Builds an op node. `backprop` receives the finished node and must
/// accumulate (+=) into each parent's grad buffer.
template <typename T>
Var<T> make_op(Tensor4<T> value, std::vector<Var<T>> inputs,
               std::function<void(Node<T>&)> backprop) {
  bool any_grad = false;
  for (const auto& v : inputs) any_grad = any_grad || v.requires_grad();
  if (!recording() || !any_grad) {
    return Var<T>::constant(std::move(value));
  }
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->parents.reserve(inputs.size());
  for (auto& v : inputs) n->parents.push_back(v.node());
  n->backprop = std::move(backprop);
  return Var<T>(std::move(n));
}

/// Reverse-mode sweep from a scalar root. Fills the grad slot of every
/// reachable node that requires grad; gradients accumulate additively across
/// fan-out. Reusing an interior node in a second backward is an error.
template <typename T>
void backward(const Var<T>& root) {
  if (!root.valid()) throw std::logic_error("backward: empty Var");
  if (root.value().numel() != 1) {
    throw std::logic_error("backward: root must be scalar, got dims " +
                           dims_to_string(root.dims()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS; `order` ends up topologically sorted with the
  // root last.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node<T>* child = node->parents[next_child++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->is_leaf() && n->consumed) {
      throw std::logic_error(
          "backward: graph already consumed by a previous backward pass");
    }
  }
  for (Node<T>* n : order) {
    n->grad_buffer();  // allocate (leaves keep accumulated grads)
    if (!n->is_leaf()) n->consumed = true;
  }
  root.node()->grad_buffer()[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// --- elementwise and reduction ops ---------------------------------------

template <typename T>
void check_same_dims(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw std::invalid_argument(std::string(op) + ": dims mismatch " +
                                dims_to_string(a.dims()) + " vs " +
                                dims_to_string(b.dims()));
  }
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_dims(a, b, "add");
  Tensor4<T> out(a.dims());
  const auto n = out.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = a.value().values[i] + b.value().values[i];
  }
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
    const auto& g = *node.value.grad;
    for (int p = 0; p < 2; ++p) {
      if (!node.parents[p]->requires_grad) continue;
      auto& pg = node.parents[p]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_dims(a, b, "sub");
  Tensor4<T> out(a.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = a.value().values[i] - b.value().values[i];
  }
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
    const auto& g = *node.value.grad;
    if (node.parents[0]->requires_grad) {
      auto& pg = node.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
    if (node.parents[1]->requires_grad) {
      auto& pg = node.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_dims(a, b, "mul");
  Tensor4<T> out(a.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = a.value().values[i] * b.value().values[i];
  }
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& node) {
    const auto& g = *node.value.grad;
    const auto& av = node.parents[0]->value.values;
    const auto& bv = node.parents[1]->value.values;
    if (node.parents[0]->requires_grad) {
      auto& pg = node.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * bv[i];
    }
    if (node.parents[1]->requires_grad) {
      auto& pg = node.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * av[i];
    }
  });
}

/// scale * x + shift, elementwise.
template <typename T>
Var<T> scalar_affine(const Var<T>& x, T scale, T shift) {
  Tensor4<T> out(x.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = scale * x.value().values[i] + shift;
  }
  return make_op<T>(std::move(out), {x}, [scale](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += scale * g[i];
  });
}

template <typename T>
Var<T> neg(const Var<T>& x) {
  return scalar_affine(x, T(-1), T(0));
}

template <typename T>
Var<T> log(const Var<T>& x) {
  Tensor4<T> out(x.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::log(x.value().values[i]);
  }
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    const auto& xv = node.parents[0]->value.values;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] / xv[i];
  });
}

template <typename T>
Var<T> square(const Var<T>& x) {
  Tensor4<T> out(x.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const T v = x.value().values[i];
    out.values[i] = v * v;
  }
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    const auto& xv = node.parents[0]->value.values;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += T(2) * xv[i] * g[i];
  });
}

/// Elementwise square root. The subgradient at 0 is taken as 0 so a zero
/// argument (e.g. identical feature batches) stays finite.
template <typename T>
Var<T> sqrt(const Var<T>& x) {
  Tensor4<T> out(x.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::sqrt(x.value().values[i]);
  }
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    const auto& yv = node.value.values;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (yv[i] > T(0)) pg[i] += g[i] / (T(2) * yv[i]);
    }
  });
}

/// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
template <typename T>
Var<T> clamp(const Var<T>& x, T lo, T hi) {
  Tensor4<T> out(x.dims());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::min(hi, std::max(lo, x.value().values[i]));
  }
  return make_op<T>(std::move(out), {x}, [lo, hi](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    const auto& xv = node.parents[0]->value.values;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > lo && xv[i] < hi) pg[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sum_all(const Var<T>& x) {
  T acc = T(0);
  for (const T& v : x.value().values) acc += v;
  return make_op<T>(Tensor4<T>::scalar(acc), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const T g = (*node.value.grad)[0];
    auto& pg = node.parents[0]->grad_buffer();
    for (auto& v : pg) v += g;
  });
}

template <typename T>
Var<T> mean_all(const Var<T>& x) {
  const auto n = x.value().numel();
  if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
  return scalar_affine(sum_all(x), T(1) / static_cast<T>(n), T(0));
}

/// Mean over the batch axis: [B,C,H,W] -> [1,C,H,W].
template <typename T>
Var<T> mean_batch(const Var<T>& x) {
  const auto& d = x.dims();
  const std::int64_t b = d[0];
  if (b == 0) throw std::invalid_argument("mean_batch: empty batch");
  const std::int64_t stride = d[1] * d[2] * d[3];
  Tensor4<T> out({1, d[1], d[2], d[3]});
  for (std::int64_t i = 0; i < b; ++i) {
    const T* src = x.value().data() + i * stride;
    for (std::int64_t j = 0; j < stride; ++j) out.values[j] += src[j];
  }
  const T inv = T(1) / static_cast<T>(b);
  for (auto& v : out.values) v *= inv;
  return make_op<T>(std::move(out), {x}, [b, stride, inv](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::int64_t i = 0; i < b; ++i) {
      T* dst = pg.data() + i * stride;
      for (std::int64_t j = 0; j < stride; ++j) dst[j] += inv * g[j];
    }
  });
}

/// Channel concatenation of same-spatial-size tensors, in argument order.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const auto& d0 = parts[0].dims();
  std::int64_t total_c = 0;
  for (const auto& p : parts) {
    const auto& d = p.dims();
    if (d[0] != d0[0] || d[2] != d0[2] || d[3] != d0[3]) {
      throw std::invalid_argument(
          "concat_channels: incompatible dims " + dims_to_string(d) + " vs " +
          dims_to_string(d0));
    }
    total_c += d[1];
  }
  Tensor4<T> out({d0[0], total_c, d0[2], d0[3]});
  const std::int64_t hw = d0[2] * d0[3];
  for (std::int64_t b = 0; b < d0[0]; ++b) {
    std::int64_t c_off = 0;
    for (const auto& p : parts) {
      const std::int64_t pc = p.dims()[1];
      const T* src = p.value().data() + b * pc * hw;
      T* dst = out.data() + (b * total_c + c_off) * hw;
      std::copy(src, src + pc * hw, dst);
      c_off += pc;
    }
  }
  std::vector<std::int64_t> part_channels;
  for (const auto& p : parts) part_channels.push_back(p.dims()[1]);
  return make_op<T>(
      std::move(out), parts,
      [part_channels, hw, total_c, nb = d0[0]](Node<T>& node) {
        const auto& g = *node.value.grad;
        for (std::int64_t b = 0; b < nb; ++b) {
          std::int64_t c_off = 0;
          for (std::size_t p = 0; p < node.parents.size(); ++p) {
            const std::int64_t pc = part_channels[p];
            if (node.parents[p]->requires_grad) {
              auto& pg = node.parents[p]->grad_buffer();
              const T* src = g.data() + (b * total_c + c_off) * hw;
              T* dst = pg.data() + b * pc * hw;
              for (std::int64_t j = 0; j < pc * hw; ++j) dst[j] += src[j];
            }
            c_off += pc;
          }
        }
      });
}

/// View [B,C,H,W] as [B,C*H*W,1,1]; values are shared row-major so this is
/// a pure relabeling.
template <typename T>
Var<T> flatten_spatial(const Var<T>& x) {
  const auto& d = x.dims();
  Tensor4<T> out({d[0], d[1] * d[2] * d[3], 1, 1}, x.value().values);
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    const auto& g = *node.value.grad;
    auto& pg = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
  });
}

/// Euclidean norm of all entries as a scalar graph node.
template <typename T>
Var<T> l2_norm(const Var<T>& x) {
  return sqrt(sum_all(square(x)));
}

}  // namespace dcal::ad
