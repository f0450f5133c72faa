#include "dcal/svm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "dcal/errors.hpp"

namespace dcal::svm {

void Standardizer::fit(const std::vector<double>& x, std::int64_t n,
                       std::int64_t d) {
  if (n < 1) throw DataError("Standardizer: no rows");
  if (static_cast<std::int64_t>(x.size()) != n * d) {
    throw std::invalid_argument("Standardizer: matrix size != n*d");
  }
  mean.assign(static_cast<std::size_t>(d), 0.0);
  scale.assign(static_cast<std::size_t>(d), 1.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      mean[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(i * d + j)];
    }
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  std::vector<double> var(static_cast<std::size_t>(d), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      const double dv =
          x[static_cast<std::size_t>(i * d + j)] - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += dv * dv;
    }
  }
  for (std::int64_t j = 0; j < d; ++j) {
    const double v = var[static_cast<std::size_t>(j)] / static_cast<double>(n);
    const double sd = std::sqrt(v);
    scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
  }
}

void Standardizer::apply_inplace(std::vector<double>& x, std::int64_t n,
                                 std::int64_t d) const {
  if (!fitted()) return;
  if (static_cast<std::int64_t>(mean.size()) != d) {
    throw std::invalid_argument("Standardizer: dimension mismatch");
  }
  if (static_cast<std::int64_t>(x.size()) != n * d) {
    throw std::invalid_argument("Standardizer: matrix size != n*d");
  }
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      auto& v = x[static_cast<std::size_t>(i * d + j)];
      v = (v - mean[static_cast<std::size_t>(j)]) /
          scale[static_cast<std::size_t>(j)];
    }
  }
}

namespace {

void check_input(const std::vector<double>& x, std::int64_t n, std::int64_t d,
                 const std::vector<int>& y) {
  if (n < 2) throw DataError("svm: need at least 2 training rows");
  if (static_cast<std::int64_t>(x.size()) != n * d) {
    throw std::invalid_argument("svm: matrix size != n*d");
  }
  if (static_cast<std::int64_t>(y.size()) != n) {
    throw std::invalid_argument("svm: labels length != n");
  }
  bool pos = false, neg = false;
  for (int l : y) {
    if (l == 1) pos = true;
    else if (l == -1) neg = true;
    else throw std::invalid_argument("svm: labels must be +1/-1, got " +
                                     std::to_string(l));
  }
  if (!pos || !neg) throw DataError("svm: training rows contain a single class");
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("svm: non-finite feature value");
  }
}

double objective_wb(const std::vector<double>& w, double b, double c,
                    const std::vector<double>& x, std::int64_t n,
                    std::int64_t d, const std::vector<int>& y) {
  double obj = 0.0;
  for (double wj : w) obj += 0.5 * wj * wj;
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * d;
    double f = b;
    for (std::int64_t j = 0; j < d; ++j) f += w[static_cast<std::size_t>(j)] * row[j];
    const double m = 1.0 - static_cast<double>(y[static_cast<std::size_t>(i)]) * f;
    if (m > 0.0) obj += c * m * m;
  }
  return obj;
}

void gradient_wb(const std::vector<double>& w, double b, double c,
                 const std::vector<double>& x, std::int64_t n, std::int64_t d,
                 const std::vector<int>& y, std::vector<double>& gw,
                 double& gb) {
  gw.assign(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) gw[j] = w[j];
  gb = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * d;
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    double f = b;
    for (std::int64_t j = 0; j < d; ++j) f += w[static_cast<std::size_t>(j)] * row[j];
    const double m = 1.0 - yi * f;
    if (m > 0.0) {
      const double k = -2.0 * c * yi * m;
      for (std::int64_t j = 0; j < d; ++j) {
        gw[static_cast<std::size_t>(j)] += k * row[j];
      }
      gb += k;
    }
  }
}

}  // namespace

double svm_objective(const SvmModel& model, const std::vector<double>& x,
                     std::int64_t n, std::int64_t d,
                     const std::vector<int>& y) {
  std::vector<double> rows = x;
  model.standardizer.apply_inplace(rows, n, d);
  return objective_wb(model.w, model.b, model.c, rows, n, d, y);
}

SvmModel svm_fit_raw(const std::vector<double>& x, std::int64_t n,
                     std::int64_t d, const std::vector<int>& y,
                     const FitOptions& opts, FitDiagnostics* diag) {
  check_input(x, n, d, y);
  if (!(opts.c > 0.0)) throw std::invalid_argument("svm: C must be > 0");

  SvmModel model;
  model.w.assign(static_cast<std::size_t>(d), 0.0);
  model.b = 0.0;
  model.c = opts.c;

  std::vector<double> gw;
  double gb = 0.0;
  std::vector<double> w_try(model.w.size());
  double obj = objective_wb(model.w, model.b, opts.c, x, n, d, y);
  double step = 1.0;
  int iter = 0;
  bool converged = false;
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-18;

  for (; iter < opts.max_iters; ++iter) {
    gradient_wb(model.w, model.b, opts.c, x, n, d, y, gw, gb);
    double gnorm2 = gb * gb;
    for (double g : gw) gnorm2 += g * g;
    if (gnorm2 == 0.0) {
      converged = true;
      break;
    }
    step *= 2.0;  // let the accepted step grow back after cautious iterations
    double new_obj = obj;
    double b_try = model.b;
    bool accepted = false;
    while (step >= kMinStep) {
      for (std::size_t j = 0; j < gw.size(); ++j) {
        w_try[j] = model.w[j] - step * gw[j];
      }
      b_try = model.b - step * gb;
      new_obj = objective_wb(w_try, b_try, opts.c, x, n, d, y);
      if (new_obj <= obj - kArmijo * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;  // no descent direction progress at machine scale
      break;
    }
    if (new_obj > obj) {
      throw std::logic_error("svm: accepted step increased the objective");
    }
    model.w.swap(w_try);
    model.b = b_try;
    const double decrease = obj - new_obj;
    obj = new_obj;
    if (decrease < opts.tol * (1.0 + std::abs(obj))) {
      ++iter;
      converged = true;
      break;
    }
  }

  if (diag) {
    diag->iterations = iter;
    diag->objective = obj;
    diag->converged = converged;
  }
  return model;
}

SvmModel svm_train(const std::vector<double>& x, std::int64_t n,
                   std::int64_t d, const std::vector<int>& y,
                   const FitOptions& opts, FitDiagnostics* diag) {
  check_input(x, n, d, y);
  Standardizer st;
  st.fit(x, n, d);
  std::vector<double> rows = x;
  st.apply_inplace(rows, n, d);
  SvmModel model = svm_fit_raw(rows, n, d, y, opts, diag);
  model.standardizer = std::move(st);
  return model;
}

std::vector<double> svm_decision(const SvmModel& model,
                                 const std::vector<double>& x, std::int64_t n,
                                 std::int64_t d) {
  if (static_cast<std::int64_t>(model.w.size()) != d) {
    throw std::invalid_argument("svm_decision: expected d = " +
                                std::to_string(model.w.size()) + ", got " +
                                std::to_string(d));
  }
  if (static_cast<std::int64_t>(x.size()) != n * d) {
    throw std::invalid_argument("svm_decision: matrix size != n*d");
  }
  std::vector<double> rows = x;
  model.standardizer.apply_inplace(rows, n, d);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = rows.data() + i * d;
    double f = model.b;
    for (std::int64_t j = 0; j < d; ++j) {
      f += model.w[static_cast<std::size_t>(j)] * row[j];
    }
    out[static_cast<std::size_t>(i)] = f;
  }
  return out;
}

std::vector<int> svm_predict(const SvmModel& model,
                             const std::vector<double>& x, std::int64_t n,
                             std::int64_t d) {
  const std::vector<double> dec = svm_decision(model, x, n, d);
  std::vector<int> labels(dec.size());
  for (std::size_t i = 0; i < dec.size(); ++i) {
    labels[i] = dec[i] >= 0.0 ? 1 : -1;
  }
  return labels;
}

namespace {

constexpr std::uint16_t kModelVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

void put_f64_vec(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  if (!is) throw DataError("svm model file truncated");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("svm model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

std::vector<double> get_f64_vec(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::vector<double> v(n);
  for (std::uint64_t i = 0; i < n; ++i) v[i] = get_f64(is);
  return v;
}

}  // namespace

void save_model(const std::string& path, const SvmModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("save_model: cannot open '" + path + "'");
  os.write("DSVM", 4);
  put_u16(os, kModelVersion);
  put_f64_vec(os, model.w);
  put_f64(os, model.b);
  put_f64(os, model.c);
  os.put(model.standardizer.fitted() ? '\1' : '\0');
  if (model.standardizer.fitted()) {
    put_f64_vec(os, model.standardizer.mean);
    put_f64_vec(os, model.standardizer.scale);
  }
  if (!os) throw DataError("save_model: write failed for '" + path + "'");
}

SvmModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_model: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DSVM", 4) != 0) {
    throw DataError("load_model: '" + path + "' is not an svm model file");
  }
  const std::uint16_t version = get_u16(is);
  if (version != kModelVersion) {
    throw DataError("load_model: unsupported version " + std::to_string(version));
  }
  SvmModel model;
  model.w = get_f64_vec(is);
  model.b = get_f64(is);
  model.c = get_f64(is);
  const int flag = is.get();
  if (flag == std::istream::traits_type::eof()) {
    throw DataError("svm model file truncated");
  }
  if (flag == 1) {
    model.standardizer.mean = get_f64_vec(is);
    model.standardizer.scale = get_f64_vec(is);
    if (model.standardizer.mean.size() != model.w.size() ||
        model.standardizer.scale.size() != model.w.size()) {
      throw DataError("load_model: standardizer size mismatch");
    }
  } else if (flag != 0) {
    throw DataError("load_model: corrupt standardizer flag");
  }
  is.peek();
  if (!is.eof()) throw DataError("load_model: trailing bytes in '" + path + "'");
  return model;
}

}  // namespace dcal::svm
