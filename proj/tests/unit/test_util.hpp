#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcal/tensor.hpp"

namespace testutil {

/// [1,1,H,W] tensor from a row-major list.
template <typename T>
dcal::Tensor4<T> image(std::int64_t h, std::int64_t w, std::vector<T> v) {
  return dcal::Tensor4<T>({1, 1, h, w}, std::move(v));
}

/// [1,1,H,W] filled with 1..H*W row-major.
template <typename T>
dcal::Tensor4<T> iota_image(std::int64_t h, std::int64_t w) {
  std::vector<T> v(static_cast<std::size_t>(h * w));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(i + 1);
  return dcal::Tensor4<T>({1, 1, h, w}, std::move(v));
}

/// Fresh scratch directory under the system temp dir; wiped on construction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / "dcal_tests" / name) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& leaf) const {
    return (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
