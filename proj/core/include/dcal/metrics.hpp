#pragma once

#include <cstdint>
#include <vector>

namespace dcal::metrics {

/// A rate with an explicit defined flag: a zero denominator yields
/// value = NaN and defined = false, never a silent 0.
struct Rate {
  double value;
  bool defined;
};

struct ConfusionMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  Rate accuracy{0, false};
  Rate sensitivity{0, false};  // TP / (TP + FN)
  Rate specificity{0, false};  // TN / (FP + TN)
  Rate precision{0, false};    // TP / (TP + FP)
};

/// Labels in {+1, -1}; +1 is the positive class.
ConfusionMetrics compute_metrics(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold: per-class shuffle, then deal each class across folds
/// with a running start offset so the +1 remainders of successive classes
/// land on different folds. Test folds partition the indices; per-fold class
/// counts differ from exact proportionality by at most one sample.
std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels, int k,
                                        std::uint64_t seed);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0,0) at threshold +inf to (1,1)
  double auc = 0.0;
};

/// Threshold sweep over all distinct decision values (predict +1 when
/// decision >= threshold) with trapezoidal area. Tied scores advance both
/// rates at once, producing the diagonal segments of the Mann-Whitney
/// half-credit convention.
RocResult roc_auc(const std::vector<double>& decision,
                  const std::vector<int>& y_true);

}  // namespace dcal::metrics
