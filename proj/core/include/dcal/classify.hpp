#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcal/features.hpp"
#include "dcal/metrics.hpp"
#include "dcal/svm.hpp"

namespace dcal::classify {

struct FoldResult {
  metrics::ConfusionMetrics cm;
  double auc = 0.0;
  std::vector<double> decisions;  // test-set decision values
  std::vector<int> y_true;        // matching labels
};

struct EvaluationReport {
  int k = 0;
  std::uint64_t seed = 0;
  double svm_c = 1.0;
  models::Fusion fusion = models::Fusion::F3;
  std::vector<FoldResult> folds;
  // Fold-mean rates (averaged over folds where the rate is defined) and the
  // pooled alternative (single confusion matrix / ROC over all test points).
  metrics::Rate mean_accuracy{0, false};
  metrics::Rate mean_sensitivity{0, false};
  metrics::Rate mean_specificity{0, false};
  metrics::Rate mean_precision{0, false};
  double mean_auc = 0.0;
  metrics::ConfusionMetrics pooled;
  metrics::RocResult pooled_roc;
};

/// Stratified k-fold protocol: per fold, standardize + train the squared-hinge
/// SVM on the train split, score the test split, collect confusion metrics
/// and ROC. Deterministic under (fm, k, seed, c).
EvaluationReport evaluate(const features::FeatureMatrix& fm, int k,
                          std::uint64_t seed, double c);

struct GridCell {
  models::Fusion fusion;
  int k;
  EvaluationReport report;
};

/// The full comparison sweep: every fusion mode crossed with every k.
/// Feature matrices must carry matching labels (same dataset).
std::vector<GridCell> evaluate_grid(
    const std::vector<features::FeatureMatrix>& per_fusion,
    const std::vector<int>& ks, std::uint64_t seed, double c);

void write_report_csv(const std::string& path, const EvaluationReport& report);
void write_roc_csv(const std::string& path, const metrics::RocResult& roc);
void write_grid_csv(const std::string& path, const std::vector<GridCell>& grid);
std::string report_text(const EvaluationReport& report);

}  // namespace dcal::classify
