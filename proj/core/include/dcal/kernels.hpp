#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcal/tensor.hpp"

namespace dcal::nn {

using std::int64_t;

template <typename T>
using MatrixR =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatrixR<T>>;
template <typename T>
using ConstMapR = Eigen::Map<const MatrixR<T>>;

enum class Act { relu, leaky_relu, tanh, sigmoid };

inline int64_t conv_out_dim(int64_t in, int k, int stride, int pad_lo,
                            int pad_hi) {
  return (in + pad_lo + pad_hi - k) / stride + 1;
}

inline int64_t conv_transpose_out_dim(int64_t in, int k, int stride,
                                      int pad_lo, int pad_hi) {
  return (in - 1) * stride - pad_lo - pad_hi + k;
}

// Patch matrix for one item: cols is [C*kh*kw, Ho*Wo] row-major, column p
// holding the receptive field of output position p. Out-of-range cells are
// zero.
template <typename T>
void im2col(const T* src, int64_t c_in, int64_t h, int64_t w, int kh, int kw,
            int stride, int pad_top, int pad_left, int64_t ho, int64_t wo,
            T* cols) {
  const int64_t plane = ho * wo;
  int64_t row = 0;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v, ++row) {
        T* dst = cols + row * plane;
        for (int64_t i = 0; i < ho; ++i) {
          const int64_t sy = i * stride + u - pad_top;
          T* drow = dst + i * wo;
          if (sy < 0 || sy >= h) {
            std::fill(drow, drow + wo, T(0));
            continue;
          }
          const T* srow = src + (c * h + sy) * w;
          for (int64_t j = 0; j < wo; ++j) {
            const int64_t sx = j * stride + v - pad_left;
            drow[j] = (sx >= 0 && sx < w) ? srow[sx] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add inverse of im2col.
template <typename T>
void col2im_add(const T* cols, int64_t c_in, int64_t h, int64_t w, int kh,
                int kw, int stride, int pad_top, int pad_left, int64_t ho,
                int64_t wo, T* dst) {
  const int64_t plane = ho * wo;
  int64_t row = 0;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v, ++row) {
        const T* srcrow = cols + row * plane;
        for (int64_t i = 0; i < ho; ++i) {
          const int64_t sy = i * stride + u - pad_top;
          if (sy < 0 || sy >= h) continue;
          T* drow = dst + (c * h + sy) * w;
          for (int64_t j = 0; j < wo; ++j) {
            const int64_t sx = j * stride + v - pad_left;
            if (sx >= 0 && sx < w) drow[sx] += srcrow[i * wo + j];
          }
        }
      }
    }
  }
}

// --- conv2d ---------------------------------------------------------------
// kernels: [Cout, Cin, kh, kw]; cross-correlation, no kernel flip.

template <typename T>
void check_conv_args(const Dims4& in, const Dims4& k, int stride,
                     const Pad2d& pad) {
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (k[2] < 1 || k[3] < 1) {
    throw std::invalid_argument("conv2d: kernel spatial dims must be positive");
  }
  if (in[1] != k[1]) {
    throw std::invalid_argument("conv2d: input channels " +
                                std::to_string(in[1]) +
                                " != kernel in-channels " +
                                std::to_string(k[1]));
  }
  const int64_t ho = conv_out_dim(in[2], static_cast<int>(k[2]), stride,
                                  pad.top, pad.bottom);
  const int64_t wo = conv_out_dim(in[3], static_cast<int>(k[3]), stride,
                                  pad.left, pad.right);
  if (ho <= 0 || wo <= 0) {
    throw std::invalid_argument("conv2d: nonpositive output dims " +
                                std::to_string(ho) + "x" + std::to_string(wo));
  }
}

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& input, const Tensor4<T>& kernels,
                          const std::vector<T>& bias, int stride,
                          const Pad2d& pad) {
  check_conv_args<T>(input.dims, kernels.dims, stride, pad);
  const int64_t b = input.dims[0], cin = input.dims[1], h = input.dims[2],
                w = input.dims[3];
  const int64_t cout = kernels.dims[0];
  const int kh = static_cast<int>(kernels.dims[2]);
  const int kw = static_cast<int>(kernels.dims[3]);
  if (static_cast<int64_t>(bias.size()) != cout) {
    throw std::invalid_argument("conv2d: bias length != out-channels");
  }
  const int64_t ho = conv_out_dim(h, kh, stride, pad.top, pad.bottom);
  const int64_t wo = conv_out_dim(w, kw, stride, pad.left, pad.right);
  const int64_t ckk = cin * kh * kw;
  const int64_t plane = ho * wo;

  Tensor4<T> out({b, cout, ho, wo});
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  ConstMapR<T> kmat(kernels.data(), cout, ckk);
  for (int64_t i = 0; i < b; ++i) {
    im2col(input.data() + i * cin * h * w, cin, h, w, kh, kw, stride, pad.top,
           pad.left, ho, wo, cols.data());
    ConstMapR<T> cmat(cols.data(), ckk, plane);
    MapR<T> omat(out.data() + i * cout * plane, cout, plane);
    omat.noalias() = kmat * cmat;
    for (int64_t c = 0; c < cout; ++c) omat.row(c).array() += bias[c];
  }
  return out;
}

template <typename T>
Tensor4<T> conv2d_backward_input(const Tensor4<T>& grad_out,
                                 const Tensor4<T>& kernels, const Dims4& in_dims,
                                 int stride, const Pad2d& pad) {
  const int64_t b = grad_out.dims[0], cout = grad_out.dims[1],
                ho = grad_out.dims[2], wo = grad_out.dims[3];
  const int64_t cin = kernels.dims[1];
  const int kh = static_cast<int>(kernels.dims[2]);
  const int kw = static_cast<int>(kernels.dims[3]);
  const int64_t ckk = cin * kh * kw;
  const int64_t plane = ho * wo;

  Tensor4<T> grad_in(in_dims);
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  ConstMapR<T> kmat(kernels.data(), cout, ckk);
  for (int64_t i = 0; i < b; ++i) {
    ConstMapR<T> gmat(grad_out.data() + i * cout * plane, cout, plane);
    MapR<T> cmat(cols.data(), ckk, plane);
    cmat.noalias() = kmat.transpose() * gmat;
    col2im_add(cols.data(), cin, in_dims[2], in_dims[3], kh, kw, stride,
               pad.top, pad.left, ho, wo,
               grad_in.data() + i * cin * in_dims[2] * in_dims[3]);
  }
  return grad_in;
}

template <typename T>
Tensor4<T> conv2d_backward_filter(const Tensor4<T>& grad_out,
                                  const Tensor4<T>& input, const Dims4& k_dims,
                                  int stride, const Pad2d& pad) {
  const int64_t b = grad_out.dims[0], cout = grad_out.dims[1],
                ho = grad_out.dims[2], wo = grad_out.dims[3];
  const int64_t cin = input.dims[1], h = input.dims[2], w = input.dims[3];
  const int kh = static_cast<int>(k_dims[2]);
  const int kw = static_cast<int>(k_dims[3]);
  const int64_t ckk = cin * kh * kw;
  const int64_t plane = ho * wo;

  Tensor4<T> grad_k(k_dims);
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  MapR<T> dkmat(grad_k.data(), cout, ckk);
  for (int64_t i = 0; i < b; ++i) {
    im2col(input.data() + i * cin * h * w, cin, h, w, kh, kw, stride, pad.top,
           pad.left, ho, wo, cols.data());
    ConstMapR<T> cmat(cols.data(), ckk, plane);
    ConstMapR<T> gmat(grad_out.data() + i * cout * plane, cout, plane);
    dkmat.noalias() += gmat * cmat.transpose();
  }
  return grad_k;
}

template <typename T>
std::vector<T> conv_backward_bias(const Tensor4<T>& grad_out) {
  const int64_t b = grad_out.dims[0], c = grad_out.dims[1],
                plane = grad_out.dims[2] * grad_out.dims[3];
  std::vector<T> db(static_cast<std::size_t>(c), T(0));
  for (int64_t i = 0; i < b; ++i) {
    for (int64_t j = 0; j < c; ++j) {
      const T* src = grad_out.data() + (i * c + j) * plane;
      T acc = T(0);
      for (int64_t p = 0; p < plane; ++p) acc += src[p];
      db[static_cast<std::size_t>(j)] += acc;
    }
  }
  return db;
}

// --- conv_transpose2d -------------------------------------------------------
// kernels: [Cin, Cout, kh, kw]. With zero bias this is the exact adjoint of
// conv2d under the same (kernels, stride, pad), so the inner-product identity
// <conv2d(x,W), y> == <x, conv_transpose2d(y,W)> holds.

template <typename T>
Tensor4<T> conv_transpose2d_forward(const Tensor4<T>& input,
                                    const Tensor4<T>& kernels,
                                    const std::vector<T>& bias, int stride,
                                    const Pad2d& pad) {
  if (stride < 1) {
    throw std::invalid_argument("conv_transpose2d: stride must be >= 1");
  }
  const int64_t b = input.dims[0], cin = input.dims[1], h = input.dims[2],
                w = input.dims[3];
  if (cin != kernels.dims[0]) {
    throw std::invalid_argument(
        "conv_transpose2d: input channels " + std::to_string(cin) +
        " != kernel dim0 " + std::to_string(kernels.dims[0]));
  }
  const int64_t cout = kernels.dims[1];
  const int kh = static_cast<int>(kernels.dims[2]);
  const int kw = static_cast<int>(kernels.dims[3]);
  if (static_cast<int64_t>(bias.size()) != cout) {
    throw std::invalid_argument("conv_transpose2d: bias length != out-channels");
  }
  const int64_t ho = conv_transpose_out_dim(h, kh, stride, pad.top, pad.bottom);
  const int64_t wo = conv_transpose_out_dim(w, kw, stride, pad.left, pad.right);
  if (ho <= 0 || wo <= 0) {
    throw std::invalid_argument("conv_transpose2d: nonpositive output dims " +
                                std::to_string(ho) + "x" + std::to_string(wo));
  }
  const int64_t ckk = cout * kh * kw;
  const int64_t plane = h * w;

  Tensor4<T> out({b, cout, ho, wo});
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  ConstMapR<T> kmat(kernels.data(), cin, ckk);
  for (int64_t i = 0; i < b; ++i) {
    ConstMapR<T> imat(input.data() + i * cin * plane, cin, plane);
    MapR<T> cmat(cols.data(), ckk, plane);
    cmat.noalias() = kmat.transpose() * imat;
    T* oitem = out.data() + i * cout * ho * wo;
    col2im_add(cols.data(), cout, ho, wo, kh, kw, stride, pad.top, pad.left, h,
               w, oitem);
    for (int64_t c = 0; c < cout; ++c) {
      T* orow = oitem + c * ho * wo;
      for (int64_t p = 0; p < ho * wo; ++p) orow[p] += bias[c];
    }
  }
  return out;
}

template <typename T>
Tensor4<T> conv_transpose2d_backward_input(const Tensor4<T>& grad_out,
                                           const Tensor4<T>& kernels,
                                           const Dims4& in_dims, int stride,
                                           const Pad2d& pad) {
  const int64_t b = grad_out.dims[0], cout = grad_out.dims[1],
                ho = grad_out.dims[2], wo = grad_out.dims[3];
  const int64_t cin = kernels.dims[0];
  const int kh = static_cast<int>(kernels.dims[2]);
  const int kw = static_cast<int>(kernels.dims[3]);
  const int64_t ckk = cout * kh * kw;
  const int64_t plane = in_dims[2] * in_dims[3];

  Tensor4<T> grad_in(in_dims);
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  ConstMapR<T> kmat(kernels.data(), cin, ckk);
  for (int64_t i = 0; i < b; ++i) {
    im2col(grad_out.data() + i * cout * ho * wo, cout, ho, wo, kh, kw, stride,
           pad.top, pad.left, in_dims[2], in_dims[3], cols.data());
    ConstMapR<T> cmat(cols.data(), ckk, plane);
    MapR<T> gmat(grad_in.data() + i * cin * plane, cin, plane);
    gmat.noalias() = kmat * cmat;
  }
  return grad_in;
}

template <typename T>
Tensor4<T> conv_transpose2d_backward_filter(const Tensor4<T>& grad_out,
                                            const Tensor4<T>& input,
                                            const Dims4& k_dims, int stride,
                                            const Pad2d& pad) {
  const int64_t b = grad_out.dims[0], cout = grad_out.dims[1],
                ho = grad_out.dims[2], wo = grad_out.dims[3];
  const int64_t cin = input.dims[1], h = input.dims[2], w = input.dims[3];
  const int kh = static_cast<int>(k_dims[2]);
  const int kw = static_cast<int>(k_dims[3]);
  const int64_t ckk = cout * kh * kw;
  const int64_t plane = h * w;

  Tensor4<T> grad_k(k_dims);
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  MapR<T> dkmat(grad_k.data(), cin, ckk);
  for (int64_t i = 0; i < b; ++i) {
    im2col(grad_out.data() + i * cout * ho * wo, cout, ho, wo, kh, kw, stride,
           pad.top, pad.left, h, w, cols.data());
    ConstMapR<T> cmat(cols.data(), ckk, plane);
    ConstMapR<T> imat(input.data() + i * cin * plane, cin, plane);
    dkmat.noalias() += imat * cmat.transpose();
  }
  return grad_k;
}

// --- max pooling ------------------------------------------------------------
// Padding has -inf semantics: a padded cell never wins. The argmax map stores
// the flat index of the winning input element per output cell; ties resolve
// to the first element in row-major window order.

template <typename T>
struct MaxPoolResult {
  Tensor4<T> output;
  std::vector<int64_t> argmax;
};

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor4<T>& input, int window,
                                 int stride, int pad) {
  if (window < 1 || stride < 1 || pad < 0) {
    throw std::invalid_argument("maxpool: bad window/stride/pad");
  }
  const int64_t b = input.dims[0], c = input.dims[1], h = input.dims[2],
                w = input.dims[3];
  if (window > h + 2 * pad || window > w + 2 * pad) {
    throw std::invalid_argument("maxpool: window larger than padded input");
  }
  const int64_t ho = conv_out_dim(h, window, stride, pad, pad);
  const int64_t wo = conv_out_dim(w, window, stride, pad, pad);

  MaxPoolResult<T> res{Tensor4<T>({b, c, ho, wo}),
                       std::vector<int64_t>(
                           static_cast<std::size_t>(b * c * ho * wo), -1)};
  int64_t out_idx = 0;
  for (int64_t i = 0; i < b; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* plane = input.data() + (i * c + ch) * h * w;
      const int64_t base = (i * c + ch) * h * w;
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox, ++out_idx) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t best_idx = -1;
          for (int u = 0; u < window; ++u) {
            const int64_t sy = oy * stride + u - pad;
            if (sy < 0 || sy >= h) continue;
            for (int v = 0; v < window; ++v) {
              const int64_t sx = ox * stride + v - pad;
              if (sx < 0 || sx >= w) continue;
              const T val = plane[sy * w + sx];
              if (val > best) {
                best = val;
                best_idx = base + sy * w + sx;
              }
            }
          }
          if (best_idx < 0) {
            throw std::invalid_argument(
                "maxpool: window covers only padding at output (" +
                std::to_string(oy) + "," + std::to_string(ox) + ")");
          }
          res.output.values[static_cast<std::size_t>(out_idx)] = best;
          res.argmax[static_cast<std::size_t>(out_idx)] = best_idx;
        }
      }
    }
  }
  return res;
}

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& grad_out,
                            const std::vector<int64_t>& argmax,
                            const Dims4& in_dims) {
  Tensor4<T> grad_in(in_dims);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad_in.values[static_cast<std::size_t>(argmax[i])] += grad_out.values[i];
  }
  return grad_in;
}

// --- batch normalization ----------------------------------------------------
// Per-channel statistics over (batch, height, width). Train mode uses batch
// statistics and updates the running buffers in place:
//   running = momentum * running + (1 - momentum) * batch_stat
// with the unbiased variance entering the running buffer.

template <typename T>
struct BatchNormCache {
  std::vector<T> xhat;     // normalized input, full tensor size
  std::vector<T> inv_std;  // 1/sqrt(var + eps), per channel
  int64_t count = 0;       // reduction count B*H*W
};

template <typename T>
Tensor4<T> batchnorm_forward_train(const Tensor4<T>& input,
                                   const std::vector<T>& gamma,
                                   const std::vector<T>& beta,
                                   std::vector<T>& running_mean,
                                   std::vector<T>& running_var, T momentum,
                                   T eps, BatchNormCache<T>* cache) {
  const int64_t b = input.dims[0], c = input.dims[1],
                plane = input.dims[2] * input.dims[3];
  if (b < 2) {
    throw std::invalid_argument("batchnorm: train mode requires batch >= 2");
  }
  const int64_t n = b * plane;
  Tensor4<T> out(input.dims);
  if (cache) {
    cache->xhat.resize(input.values.size());
    cache->inv_std.assign(static_cast<std::size_t>(c), T(0));
    cache->count = n;
  }
  for (int64_t ch = 0; ch < c; ++ch) {
    T mean = T(0);
    for (int64_t i = 0; i < b; ++i) {
      const T* src = input.data() + (i * c + ch) * plane;
      for (int64_t p = 0; p < plane; ++p) mean += src[p];
    }
    mean /= static_cast<T>(n);
    T var = T(0);
    for (int64_t i = 0; i < b; ++i) {
      const T* src = input.data() + (i * c + ch) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        const T d = src[p] - mean;
        var += d * d;
      }
    }
    var /= static_cast<T>(n);
    const T inv_std = T(1) / std::sqrt(var + eps);
    const T g = gamma[static_cast<std::size_t>(ch)];
    const T bt = beta[static_cast<std::size_t>(ch)];
    for (int64_t i = 0; i < b; ++i) {
      const T* src = input.data() + (i * c + ch) * plane;
      T* dst = out.data() + (i * c + ch) * plane;
      T* xh = cache ? cache->xhat.data() + (i * c + ch) * plane : nullptr;
      for (int64_t p = 0; p < plane; ++p) {
        const T nh = (src[p] - mean) * inv_std;
        if (xh) xh[p] = nh;
        dst[p] = g * nh + bt;
      }
    }
    if (cache) cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
    const T unbiased = n > 1 ? var * static_cast<T>(n) / static_cast<T>(n - 1)
                             : var;
    running_mean[static_cast<std::size_t>(ch)] =
        momentum * running_mean[static_cast<std::size_t>(ch)] +
        (T(1) - momentum) * mean;
    running_var[static_cast<std::size_t>(ch)] =
        momentum * running_var[static_cast<std::size_t>(ch)] +
        (T(1) - momentum) * unbiased;
  }
  return out;
}

template <typename T>
Tensor4<T> batchnorm_forward_eval(const Tensor4<T>& input,
                                  const std::vector<T>& gamma,
                                  const std::vector<T>& beta,
                                  const std::vector<T>& running_mean,
                                  const std::vector<T>& running_var, T eps,
                                  BatchNormCache<T>* cache) {
  const int64_t b = input.dims[0], c = input.dims[1],
                plane = input.dims[2] * input.dims[3];
  Tensor4<T> out(input.dims);
  if (cache) {
    cache->xhat.resize(input.values.size());
    cache->inv_std.assign(static_cast<std::size_t>(c), T(0));
    cache->count = 0;  // eval: no batch-statistic coupling
  }
  for (int64_t ch = 0; ch < c; ++ch) {
    const T rv = running_var[static_cast<std::size_t>(ch)];
    if (!(rv > T(0))) {
      throw std::invalid_argument("batchnorm: running variance must be > 0");
    }
    const T inv_std = T(1) / std::sqrt(rv + eps);
    const T mean = running_mean[static_cast<std::size_t>(ch)];
    const T g = gamma[static_cast<std::size_t>(ch)];
    const T bt = beta[static_cast<std::size_t>(ch)];
    if (cache) cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
    for (int64_t i = 0; i < b; ++i) {
      const T* src = input.data() + (i * c + ch) * plane;
      T* dst = out.data() + (i * c + ch) * plane;
      T* xh = cache ? cache->xhat.data() + (i * c + ch) * plane : nullptr;
      for (int64_t p = 0; p < plane; ++p) {
        const T nh = (src[p] - mean) * inv_std;
        if (xh) xh[p] = nh;
        dst[p] = g * nh + bt;
      }
    }
  }
  return out;
}

/// Backward through train-mode batchnorm (gradients flow through the batch
/// statistics). When `cache->count == 0` the statistics were fixed (eval
/// mode) and the input gradient is just g * gamma * inv_std.
template <typename T>
Tensor4<T> batchnorm_backward(const Tensor4<T>& grad_out,
                              const std::vector<T>& gamma,
                              const BatchNormCache<T>& cache,
                              std::vector<T>& dgamma, std::vector<T>& dbeta) {
  const int64_t b = grad_out.dims[0], c = grad_out.dims[1],
                plane = grad_out.dims[2] * grad_out.dims[3];
  const int64_t n = cache.count;
  Tensor4<T> grad_in(grad_out.dims);
  dgamma.assign(static_cast<std::size_t>(c), T(0));
  dbeta.assign(static_cast<std::size_t>(c), T(0));
  for (int64_t ch = 0; ch < c; ++ch) {
    T sum_g = T(0), sum_gx = T(0);
    for (int64_t i = 0; i < b; ++i) {
      const T* g = grad_out.data() + (i * c + ch) * plane;
      const T* xh = cache.xhat.data() + (i * c + ch) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        sum_g += g[p];
        sum_gx += g[p] * xh[p];
      }
    }
    dgamma[static_cast<std::size_t>(ch)] = sum_gx;
    dbeta[static_cast<std::size_t>(ch)] = sum_g;
    const T gm = gamma[static_cast<std::size_t>(ch)];
    const T inv_std = cache.inv_std[static_cast<std::size_t>(ch)];
    if (n == 0) {
      const T k = gm * inv_std;
      for (int64_t i = 0; i < b; ++i) {
        const T* g = grad_out.data() + (i * c + ch) * plane;
        T* d = grad_in.data() + (i * c + ch) * plane;
        for (int64_t p = 0; p < plane; ++p) d[p] = k * g[p];
      }
    } else {
      const T k = gm * inv_std / static_cast<T>(n);
      for (int64_t i = 0; i < b; ++i) {
        const T* g = grad_out.data() + (i * c + ch) * plane;
        const T* xh = cache.xhat.data() + (i * c + ch) * plane;
        T* d = grad_in.data() + (i * c + ch) * plane;
        for (int64_t p = 0; p < plane; ++p) {
          d[p] = k * (static_cast<T>(n) * g[p] - sum_g - xh[p] * sum_gx);
        }
      }
    }
  }
  return grad_in;
}

// --- activations --------------------------------------------------------

template <typename T>
Tensor4<T> act_forward(const Tensor4<T>& input, Act kind, T alpha) {
  Tensor4<T> out(input.dims);
  switch (kind) {
    case Act::relu:
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        const T v = input.values[i];
        out.values[i] = v > T(0) ? v : T(0);
      }
      break;
    case Act::leaky_relu:
      if (!(alpha > T(0) && alpha < T(1))) {
        throw std::invalid_argument("leaky_relu: alpha must be in (0,1)");
      }
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        const T v = input.values[i];
        out.values[i] = v > T(0) ? v : alpha * v;
      }
      break;
    case Act::tanh:
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::tanh(input.values[i]);
      }
      break;
    case Act::sigmoid:
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = T(1) / (T(1) + std::exp(-input.values[i]));
      }
      break;
  }
  return out;
}

/// relu / leaky_relu derivative in terms of the saved input.
template <typename T>
void act_backward_from_input(const std::vector<T>& grad_out,
                             const std::vector<T>& input, Act kind, T alpha,
                             std::vector<T>& grad_in_accum) {
  if (kind == Act::relu) {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      if (input[i] > T(0)) grad_in_accum[i] += grad_out[i];
    }
  } else {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      grad_in_accum[i] +=
          grad_out[i] * (input[i] > T(0) ? T(1) : alpha);
    }
  }
}

/// tanh / sigmoid derivative in terms of the saved output.
template <typename T>
void act_backward_from_output(const std::vector<T>& grad_out,
                              const std::vector<T>& output, Act kind,
                              std::vector<T>& grad_in_accum) {
  if (kind == Act::tanh) {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      grad_in_accum[i] += grad_out[i] * (T(1) - output[i] * output[i]);
    }
  } else {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      grad_in_accum[i] += grad_out[i] * output[i] * (T(1) - output[i]);
    }
  }
}

}  // namespace dcal::nn
