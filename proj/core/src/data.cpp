#include "dcal/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "dcal/errors.hpp"
#include "dcal/rng.hpp"

namespace fs = std::filesystem;

namespace dcal::data {

SynthSpec SynthSpec::defaults(std::int64_t size, int n_per_class,
                              std::uint64_t seed) {
  SynthSpec s;
  s.n_per_class = n_per_class;
  s.size = size;
  s.seed = seed;
  s.pos = {2, 4, 0.15, 0.28, 0.8, 1.3, 0.0};
  s.neg = {12, 24, 0.03, 0.06, 0.7, 1.2, 0.45};
  s.noise_sigma = 0.05;
  return s;
}

namespace {

void check_class(const ClassParams& p, const char* which) {
  if (p.blobs_min < 1 || p.blobs_max < p.blobs_min ||
      !(p.radius_min > 0) || p.radius_max < p.radius_min ||
      !(p.amp_min > 0) || p.amp_max < p.amp_min || p.texture_freq < 0) {
    throw ConfigError(std::string("generate_synthetic: degenerate ") + which +
                      "-class parameter ranges");
  }
}

void render_class_image(Tensor4<float>& img, const ClassParams& p,
                        std::int64_t size, double noise_sigma, Rng& rng) {
  std::vector<double> canvas(static_cast<std::size_t>(size * size), -1.0);
  const int blobs =
      p.blobs_min + static_cast<int>(rng.uniform_index(
                        static_cast<std::uint64_t>(p.blobs_max - p.blobs_min + 1)));
  const double s = static_cast<double>(size);
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0.1 * s, 0.9 * s);
    const double cy = rng.uniform(0.1 * s, 0.9 * s);
    const double radius = rng.uniform(p.radius_min, p.radius_max) * s;
    const double amp = rng.uniform(p.amp_min, p.amp_max);
    const double sigma = radius / 2.0;
    const auto y0 = static_cast<std::int64_t>(std::floor(cy - 3 * sigma));
    const auto y1 = static_cast<std::int64_t>(std::ceil(cy + 3 * sigma));
    const auto x0 = static_cast<std::int64_t>(std::floor(cx - 3 * sigma));
    const auto x1 = static_cast<std::int64_t>(std::ceil(cx + 3 * sigma));
    for (std::int64_t y = std::max<std::int64_t>(0, y0);
         y <= std::min(size - 1, y1); ++y) {
      for (std::int64_t x = std::max<std::int64_t>(0, x0);
           x <= std::min(size - 1, x1); ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double d = std::sqrt(dx * dx + dy * dy);
        double v = amp * std::exp(-(d * d) / (2 * sigma * sigma));
        if (p.texture_freq > 0) {
          v *= 0.5 * (1.0 + std::cos(2 * std::numbers::pi * p.texture_freq * d));
        }
        canvas[static_cast<std::size_t>(y * size + x)] += v;
      }
    }
  }
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    const double noisy = canvas[i] + rng.normal(0.0, noise_sigma);
    img.values[i] = static_cast<float>(std::clamp(noisy, -1.0, 1.0));
  }
}

std::string image_id(const std::string& cls, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%04d", index);
  return cls + buf;
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
  if (spec.size < 16) throw ConfigError("generate_synthetic: size must be >= 16");
  const int n_pos = spec.n_pos > 0 ? spec.n_pos : spec.n_per_class;
  const int n_neg = spec.n_neg > 0 ? spec.n_neg : spec.n_per_class;
  if (n_pos < 1 || n_neg < 1) {
    throw ConfigError("generate_synthetic: need at least one image per class");
  }
  check_class(spec.pos, "positive");
  check_class(spec.neg, "negative");

  Rng rng(spec.seed);
  Dataset ds;
  ds.image_size = spec.size;
  ds.images.reserve(static_cast<std::size_t>(n_pos + n_neg));
  for (int i = 0; i < n_pos; ++i) {
    LabeledImage li{Tensor4<float>({1, 1, spec.size, spec.size}), +1,
                    image_id(ds.pos_class, i)};
    render_class_image(li.pixels, spec.pos, spec.size, spec.noise_sigma, rng);
    ds.images.push_back(std::move(li));
  }
  for (int i = 0; i < n_neg; ++i) {
    LabeledImage li{Tensor4<float>({1, 1, spec.size, spec.size}), -1,
                    image_id(ds.neg_class, i)};
    render_class_image(li.pixels, spec.neg, spec.size, spec.noise_sigma, rng);
    ds.images.push_back(std::move(li));
  }
  return ds;
}

float normalize_pixel(double raw) {
  if (raw < 0.0 || raw > 255.0) {
    throw DataError("normalize_pixel: raw value " + std::to_string(raw) +
                    " outside [0,255]");
  }
  return static_cast<float>(raw / 127.5 - 1.0);
}

std::uint8_t denormalize_pixel(float v) {
  const double raw = (static_cast<double>(v) + 1.0) * 127.5;
  const double clamped = std::clamp(raw, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::lround(clamped));
}

Tensor4<float> decimate(const Tensor4<float>& image, std::int64_t factor) {
  if (factor < 1) throw std::invalid_argument("decimate: factor must be >= 1");
  const std::int64_t h = image.dims[2], w = image.dims[3];
  if (h % factor != 0 || w % factor != 0) {
    throw DataError("decimate: size " + std::to_string(h) + "x" +
                    std::to_string(w) + " is not a multiple of " +
                    std::to_string(factor));
  }
  Tensor4<float> out({image.dims[0], image.dims[1], h / factor, w / factor});
  for (std::int64_t y = 0; y < h / factor; ++y) {
    for (std::int64_t x = 0; x < w / factor; ++x) {
      out.values[static_cast<std::size_t>(y * (w / factor) + x)] =
          image.values[static_cast<std::size_t>(y * factor * w + x * factor)];
    }
  }
  return out;
}

void write_pgm(const std::string& path, const Tensor4<float>& image) {
  if (image.dims[0] != 1 || image.dims[1] != 1) {
    throw std::invalid_argument("write_pgm: expected [1,1,H,W] image");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("write_pgm: cannot open '" + path + "'");
  os << "P5\n" << image.dims[3] << " " << image.dims[2] << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(image.dims[3]));
  for (std::int64_t y = 0; y < image.dims[2]; ++y) {
    for (std::int64_t x = 0; x < image.dims[3]; ++x) {
      row[static_cast<std::size_t>(x)] = denormalize_pixel(
          image.values[static_cast<std::size_t>(y * image.dims[3] + x)]);
    }
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw DataError("write_pgm: write to '" + path + "' failed");
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(std::istream& is, const std::string& path) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw DataError("read_pgm: truncated header in '" + path + "'");
  return tok;
}

}  // namespace

Tensor4<float> read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("read_pgm: cannot open '" + path + "'");
  if (next_pgm_token(is, path) != "P5") {
    throw DataError("read_pgm: '" + path + "' is not a binary PGM (P5)");
  }
  std::int64_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoll(next_pgm_token(is, path));
    h = std::stoll(next_pgm_token(is, path));
    maxval = std::stoll(next_pgm_token(is, path));
  } catch (const std::exception&) {
    throw DataError("read_pgm: malformed header in '" + path + "'");
  }
  if (w < 1 || h < 1) throw DataError("read_pgm: bad dimensions in '" + path + "'");
  if (maxval != 255) {
    throw DataError("read_pgm: '" + path + "' has maxval " +
                    std::to_string(maxval) + ", only 8-bit (255) is supported");
  }
  // The header ends with exactly one whitespace byte before the raster.
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h));
  if (!is.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw DataError("read_pgm: truncated pixel data in '" + path + "'");
  }
  Tensor4<float> img({1, 1, h, w});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    img.values[i] = normalize_pixel(static_cast<double>(raw[i]));
  }
  return img;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::trunc);
    if (!manifest) throw DataError("save_dataset: cannot write manifest in '" + dir + "'");
    manifest << "label +1 = " << dataset.pos_class << "\n";
    manifest << "label -1 = " << dataset.neg_class << "\n";
  }
  fs::create_directories(fs::path(dir) / dataset.pos_class);
  fs::create_directories(fs::path(dir) / dataset.neg_class);
  for (const auto& img : dataset.images) {
    const std::string cls = img.label == 1 ? dataset.pos_class : dataset.neg_class;
    write_pgm((fs::path(dir) / cls / (img.id + ".pgm")).string(), img.pixels);
  }
}

Dataset load_dataset(const std::string& dir, std::int64_t expected_size) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    throw DataError("load_dataset: '" + dir + "' is not a directory");
  }
  const fs::path manifest_path = root / "manifest.txt";
  std::ifstream manifest(manifest_path);
  if (!manifest) {
    throw DataError("load_dataset: missing manifest '" + manifest_path.string() + "'");
  }
  std::map<std::string, int> class_of;
  Dataset ds;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kw, lab, eq, cls;
    ls >> kw >> lab >> eq >> cls;
    if (kw != "label" || eq != "=" || cls.empty() || (lab != "+1" && lab != "-1")) {
      throw DataError("load_dataset: malformed manifest line '" + line + "'");
    }
    const int label = lab == "+1" ? 1 : -1;
    class_of[cls] = label;
    (label == 1 ? ds.pos_class : ds.neg_class) = cls;
  }
  if (class_of.empty()) {
    throw DataError("load_dataset: manifest declares no classes");
  }

  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (!class_of.count(name)) {
      throw DataError("load_dataset: directory '" + name +
                      "' is not declared in the manifest");
    }
  }

  ds.image_size = expected_size;
  for (const auto& [cls, label] : class_of) {
    const fs::path cls_dir = root / cls;
    if (!fs::is_directory(cls_dir)) {
      throw DataError("load_dataset: class directory '" + cls + "' is missing");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cls_dir)) {
      if (entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    if (files.empty()) {
      throw DataError("load_dataset: class '" + cls + "' has no images");
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Tensor4<float> img = read_pgm(f.string());
      if (img.dims[2] != img.dims[3]) {
        throw DataError("load_dataset: '" + f.string() + "' is not square");
      }
      if (ds.image_size == 0) ds.image_size = img.dims[2];
      if (img.dims[2] != ds.image_size) {
        if (img.dims[2] > ds.image_size && img.dims[2] % ds.image_size == 0) {
          img = decimate(img, img.dims[2] / ds.image_size);
        } else {
          throw DataError("load_dataset: '" + f.string() + "' has size " +
                          std::to_string(img.dims[2]) + ", expected " +
                          std::to_string(ds.image_size) +
                          " (or an exact multiple)");
        }
      }
      ds.images.push_back({std::move(img), label, f.stem().string()});
    }
  }
  return ds;
}

}  // namespace dcal::data
