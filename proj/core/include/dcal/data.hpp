#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/tensor.hpp"

namespace dcal::data {

/// One grayscale image, pixels normalized to [-1,1], shaped [1,1,S,S].
struct LabeledImage {
  Tensor4<float> pixels;
  int label = 0;  // +1 or -1
  std::string id;
};

struct Dataset {
  std::vector<LabeledImage> images;
  std::int64_t image_size = 0;
  std::string pos_class = "smooth";
  std::string neg_class = "speckled";
};

/// Per-class blob parameters. `texture_freq` = 0 renders smooth Gaussian
/// blobs; > 0 modulates the profile with a radial ripple of that spatial
/// frequency (cycles per pixel), which turns small blobs into speckles.
struct ClassParams {
  int blobs_min = 0;
  int blobs_max = 0;
  double radius_min = 0;  // fraction of image size
  double radius_max = 0;
  double amp_min = 0;
  double amp_max = 0;
  double texture_freq = 0;
};

struct SynthSpec {
  int n_per_class = 100;
  // Nonzero overrides for imbalanced datasets (e.g. 23 vs 61).
  int n_pos = 0;
  int n_neg = 0;
  std::int64_t size = 64;
  std::uint64_t seed = 0;
  ClassParams pos;  // few large smooth bright blobs
  ClassParams neg;  // many small speckled blobs
  double noise_sigma = 0.05;

  static SynthSpec defaults(std::int64_t size, int n_per_class,
                            std::uint64_t seed);
};

Dataset generate_synthetic(const SynthSpec& spec);

/// [0,255] -> [-1,1] as v/127.5 - 1, and the inverse with rounding.
float normalize_pixel(double raw);
std::uint8_t denormalize_pixel(float v);

/// Keeps every factor-th pixel; the image side must be divisible by factor.
Tensor4<float> decimate(const Tensor4<float>& image, std::int64_t factor);

void write_pgm(const std::string& path, const Tensor4<float>& image);
Tensor4<float> read_pgm(const std::string& path);

/// Layout: <dir>/manifest.txt with `label <+1|-1> = <classdir>` lines and one
/// subdirectory of .pgm files per class. Images whose side is an exact
/// multiple of `expected_size` are decimated down; any other mismatch is an
/// error naming the file. expected_size = 0 adopts the first image's size.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir, std::int64_t expected_size = 0);

}  // namespace dcal::data
