#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "dcal/autodiff.hpp"
#include "dcal/kernels.hpp"

// Differentiable layer ops. Each wraps a kernel pair from kernels.hpp into a
// graph node; parameter tensors ride along as parents so backward fills their
// grads too.

namespace dcal::ad {

template <typename T>
void check_param_vec(const Var<T>& p, std::int64_t c, const char* op,
                     const char* name) {
  const auto& d = p.dims();
  if (d[0] != 1 || d[1] != c || d[2] != 1 || d[3] != 1) {
    throw std::invalid_argument(std::string(op) + ": " + name +
                                " must be [1," + std::to_string(c) +
                                ",1,1], got " + dims_to_string(d));
  }
}

template <typename T>
Tensor4<T> grad_as_tensor(Node<T>& node) {
  return Tensor4<T>(node.value.dims, *node.value.grad);
}

/// Cross-correlating convolution; kernels [Cout,Cin,kh,kw], bias [1,Cout,1,1].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernels, const Var<T>& bias,
              int stride, const Pad2d& pad) {
  check_param_vec(bias, kernels.dims()[0], "conv2d", "bias");
  Tensor4<T> out = nn::conv2d_forward(x.value(), kernels.value(),
                                      bias.value().values, stride, pad);
  const Dims4 in_dims = x.dims();
  const Dims4 k_dims = kernels.dims();
  return make_op<T>(
      std::move(out), {x, kernels, bias},
      [stride, pad, in_dims, k_dims](Node<T>& node) {
        const Tensor4<T> gout = grad_as_tensor(node);
        auto& xp = *node.parents[0];
        auto& kp = *node.parents[1];
        auto& bp = *node.parents[2];
        if (xp.requires_grad) {
          const Tensor4<T> gin = nn::conv2d_backward_input(
              gout, kp.value, in_dims, stride, pad);
          auto& pg = xp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += gin.values[i];
        }
        if (kp.requires_grad) {
          const Tensor4<T> gk = nn::conv2d_backward_filter(
              gout, xp.value, k_dims, stride, pad);
          auto& pg = kp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += gk.values[i];
        }
        if (bp.requires_grad) {
          const std::vector<T> db = nn::conv_backward_bias(gout);
          auto& pg = bp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += db[i];
        }
      });
}

/// Fractionally-strided (transposed) convolution; kernels [Cin,Cout,kh,kw],
/// bias [1,Cout,1,1]. With zero bias it is the exact adjoint of conv2d.
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& kernels,
                        const Var<T>& bias, int stride, const Pad2d& pad) {
  check_param_vec(bias, kernels.dims()[1], "conv_transpose2d", "bias");
  Tensor4<T> out = nn::conv_transpose2d_forward(
      x.value(), kernels.value(), bias.value().values, stride, pad);
  const Dims4 in_dims = x.dims();
  const Dims4 k_dims = kernels.dims();
  return make_op<T>(
      std::move(out), {x, kernels, bias},
      [stride, pad, in_dims, k_dims](Node<T>& node) {
        const Tensor4<T> gout = grad_as_tensor(node);
        auto& xp = *node.parents[0];
        auto& kp = *node.parents[1];
        auto& bp = *node.parents[2];
        if (xp.requires_grad) {
          const Tensor4<T> gin = nn::conv_transpose2d_backward_input(
              gout, kp.value, in_dims, stride, pad);
          auto& pg = xp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += gin.values[i];
        }
        if (kp.requires_grad) {
          const Tensor4<T> gk = nn::conv_transpose2d_backward_filter(
              gout, xp.value, k_dims, stride, pad);
          auto& pg = kp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += gk.values[i];
        }
        if (bp.requires_grad) {
          const std::vector<T> db = nn::conv_backward_bias(gout);
          auto& pg = bp.grad_buffer();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += db[i];
        }
      });
}

/// Max pooling with square window; overlapping when stride < window. Padding
/// never wins a window (-inf semantics).
template <typename T>
Var<T> maxpool(const Var<T>& x, int window, int stride, int pad) {
  nn::MaxPoolResult<T> res = nn::maxpool_forward(x.value(), window, stride, pad);
  const Dims4 in_dims = x.dims();
  return make_op<T>(
      std::move(res.output), {x},
      [argmax = std::move(res.argmax), in_dims](Node<T>& node) {
        if (!node.parents[0]->requires_grad) return;
        const auto& g = *node.value.grad;
        auto& pg = node.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          pg[static_cast<std::size_t>(argmax[i])] += g[i];
        }
      });
}

/// Batch normalization; gamma/beta [1,C,1,1]. Training mode normalizes with
/// batch statistics and updates the running buffers in place at forward time;
/// eval mode uses the running buffers and treats them as constants.
template <typename T>
Var<T> batchnorm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                 std::vector<T>& running_mean, std::vector<T>& running_var,
                 T momentum, T eps, bool training) {
  const std::int64_t c = x.dims()[1];
  check_param_vec(gamma, c, "batchnorm", "gamma");
  check_param_vec(beta, c, "batchnorm", "beta");
  if (static_cast<std::int64_t>(running_mean.size()) != c ||
      static_cast<std::int64_t>(running_var.size()) != c) {
    throw std::invalid_argument("batchnorm: running stats length != channels");
  }
  const bool needs_graph =
      recording() &&
      (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  auto cache = needs_graph ? std::make_shared<nn::BatchNormCache<T>>() : nullptr;
  Tensor4<T> out =
      training ? nn::batchnorm_forward_train(x.value(), gamma.value().values,
                                             beta.value().values, running_mean,
                                             running_var, momentum, eps,
                                             cache.get())
               : nn::batchnorm_forward_eval(x.value(), gamma.value().values,
                                            beta.value().values, running_mean,
                                            running_var, eps, cache.get());
  return make_op<T>(std::move(out), {x, gamma, beta}, [cache](Node<T>& node) {
    const Tensor4<T> gout = grad_as_tensor(node);
    auto& xp = *node.parents[0];
    auto& gp = *node.parents[1];
    auto& bp = *node.parents[2];
    std::vector<T> dgamma, dbeta;
    const Tensor4<T> gin =
        nn::batchnorm_backward(gout, gp.value.values, *cache, dgamma, dbeta);
    if (xp.requires_grad) {
      auto& pg = xp.grad_buffer();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += gin.values[i];
    }
    if (gp.requires_grad) {
      auto& pg = gp.grad_buffer();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += dgamma[i];
    }
    if (bp.requires_grad) {
      auto& pg = bp.grad_buffer();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += dbeta[i];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor4<T> out = nn::act_forward(x.value(), nn::Act::relu, T(0));
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    nn::act_backward_from_input(*node.value.grad, node.parents[0]->value.values,
                                nn::Act::relu, T(0),
                                node.parents[0]->grad_buffer());
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T alpha) {
  Tensor4<T> out = nn::act_forward(x.value(), nn::Act::leaky_relu, alpha);
  return make_op<T>(std::move(out), {x}, [alpha](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    nn::act_backward_from_input(*node.value.grad, node.parents[0]->value.values,
                                nn::Act::leaky_relu, alpha,
                                node.parents[0]->grad_buffer());
  });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  Tensor4<T> out = nn::act_forward(x.value(), nn::Act::tanh, T(0));
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    nn::act_backward_from_output(*node.value.grad, node.value.values,
                                 nn::Act::tanh, node.parents[0]->grad_buffer());
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor4<T> out = nn::act_forward(x.value(), nn::Act::sigmoid, T(0));
  return make_op<T>(std::move(out), {x}, [](Node<T>& node) {
    if (!node.parents[0]->requires_grad) return;
    nn::act_backward_from_output(*node.value.grad, node.value.values,
                                 nn::Act::sigmoid,
                                 node.parents[0]->grad_buffer());
  });
}

}  // namespace dcal::ad
