#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dcal {

using Dims4 = std::array<std::int64_t, 4>;

inline std::int64_t numel_of(const Dims4& d) {
  return d[0] * d[1] * d[2] * d[3];
}

inline std::string dims_to_string(const Dims4& d) {
  std::ostringstream os;
  os << "[" << d[0] << "," << d[1] << "," << d[2] << "," << d[3] << "]";
  return os.str();
}

// Per-side spatial padding (top, bottom, left, right).
struct Pad2d {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  Pad2d() = default;
  Pad2d(int t, int b, int l, int r) : top(t), bottom(b), left(l), right(r) {}
  // Symmetric padding.
  explicit Pad2d(int p) : top(p), bottom(p), left(p), right(p) {}
};

/// Dense 4-axis tensor (batch, channel, height, width), row-major in that
/// axis order, with an optional same-shape gradient slot. Vectors and
/// matrices are embedded as degenerate shapes, e.g. a length-C vector is
/// [1, C, 1, 1].
template <typename T>
class Tensor4 {
public:
  Dims4 dims{0, 0, 0, 0};
  std::vector<T> values;
  std::optional<std::vector<T>> grad;

  Tensor4() = default;

  explicit Tensor4(const Dims4& d) : dims(d) {
    check_dims(d);
    values.assign(static_cast<std::size_t>(numel_of(d)), T(0));
  }

  Tensor4(const Dims4& d, std::vector<T> v) : dims(d), values(std::move(v)) {
    check_dims(d);
    if (static_cast<std::int64_t>(values.size()) != numel_of(d)) {
      throw std::invalid_argument("Tensor4: value count " +
                                  std::to_string(values.size()) +
                                  " does not match dims " + dims_to_string(d));
    }
  }

  static Tensor4 scalar(T v) { return Tensor4({1, 1, 1, 1}, {v}); }

  std::int64_t numel() const { return numel_of(dims); }
  std::int64_t batch() const { return dims[0]; }
  std::int64_t channels() const { return dims[1]; }
  std::int64_t height() const { return dims[2]; }
  std::int64_t width() const { return dims[3]; }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }

  std::int64_t index(std::int64_t b, std::int64_t c, std::int64_t y,
                     std::int64_t x) const {
    return ((b * dims[1] + c) * dims[2] + y) * dims[3] + x;
  }

  T& at(std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x) {
    return values[static_cast<std::size_t>(index(b, c, y, x))];
  }
  const T& at(std::int64_t b, std::int64_t c, std::int64_t y,
              std::int64_t x) const {
    return values[static_cast<std::size_t>(index(b, c, y, x))];
  }

  bool all_finite() const {
    for (const T& v : values) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  void ensure_grad() {
    if (!grad) grad.emplace(values.size(), T(0));
  }

  void zero_grad() {
    if (grad) std::fill(grad->begin(), grad->end(), T(0));
  }

  /// Same dims, all values zero, no grad slot.
  Tensor4 zeros_like() const { return Tensor4(dims); }

private:
  static void check_dims(const Dims4& d) {
    for (auto v : d) {
      if (v < 0) {
        throw std::invalid_argument("Tensor4: negative dim in " +
                                    dims_to_string(d));
      }
    }
  }
};

template <typename T>
bool same_dims(const Tensor4<T>& a, const Tensor4<T>& b) {
  return a.dims == b.dims;
}

}  // namespace dcal
