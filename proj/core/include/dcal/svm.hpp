#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Linear L2-SVM: minimize 0.5*||w||^2 + C * sum_i max(0, 1 - y_i*(w.x_i + b))^2
// by full-batch gradient descent with Armijo backtracking. The squared hinge
// makes the objective differentiable, so plain descent converges on this
// strongly convex problem.

namespace dcal::svm {

/// Per-dimension affine map fitted on training rows: (x - mean) / scale with
/// scale = population standard deviation, forced to 1 for constant features.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  bool fitted() const { return !mean.empty(); }
  void fit(const std::vector<double>& x, std::int64_t n, std::int64_t d);
  void apply_inplace(std::vector<double>& x, std::int64_t n,
                     std::int64_t d) const;
};

struct SvmModel {
  std::vector<double> w;
  double b = 0.0;
  double c = 1.0;
  Standardizer standardizer;  // identity when not fitted
};

struct FitOptions {
  double c = 1.0;
  int max_iters = 5000;
  double tol = 1e-10;  // stop when relative objective decrease falls below
};

struct FitDiagnostics {
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
};

double svm_objective(const SvmModel& model, const std::vector<double>& x,
                     std::int64_t n, std::int64_t d,
                     const std::vector<int>& y);

/// Solver on the rows as given (no standardization); the grid-search oracle in
/// the tests compares against this directly.
SvmModel svm_fit_raw(const std::vector<double>& x, std::int64_t n,
                     std::int64_t d, const std::vector<int>& y,
                     const FitOptions& opts, FitDiagnostics* diag = nullptr);

/// Fits a standardizer on the rows, then solves in standardized space. The
/// transform is stored in the model and applied by svm_decision.
SvmModel svm_train(const std::vector<double>& x, std::int64_t n,
                   std::int64_t d, const std::vector<int>& y,
                   const FitOptions& opts, FitDiagnostics* diag = nullptr);

std::vector<double> svm_decision(const SvmModel& model,
                                 const std::vector<double>& x, std::int64_t n,
                                 std::int64_t d);

/// sign of the decision value; exactly zero maps to +1.
std::vector<int> svm_predict(const SvmModel& model,
                             const std::vector<double>& x, std::int64_t n,
                             std::int64_t d);

// On-disk format: magic "DSVM", u16 version, u64 d, w as little-endian
// float64, b, c, u8 standardizer flag, then mean and scale arrays if set.
void save_model(const std::string& path, const SvmModel& model);
SvmModel load_model(const std::string& path);

}  // namespace dcal::svm
