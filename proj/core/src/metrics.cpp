#include "dcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dcal/errors.hpp"
#include "dcal/rng.hpp"

namespace dcal::metrics {

namespace {

Rate rate(std::int64_t num, std::int64_t den) {
  if (den == 0) {
    return {std::numeric_limits<double>::quiet_NaN(), false};
  }
  return {static_cast<double>(num) / static_cast<double>(den), true};
}

}  // namespace

ConfusionMetrics compute_metrics(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch " +
                                std::to_string(y_true.size()) + " vs " +
                                std::to_string(y_pred.size()));
  }
  ConfusionMetrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 1 && t != -1) || (p != 1 && p != -1)) {
      throw std::invalid_argument("compute_metrics: labels must be +1/-1");
    }
    if (t == 1) {
      (p == 1 ? m.tp : m.fn) += 1;
    } else {
      (p == -1 ? m.tn : m.fp) += 1;
    }
  }
  m.accuracy = rate(m.tp + m.tn, m.tp + m.fp + m.fn + m.tn);
  m.sensitivity = rate(m.tp, m.tp + m.fn);
  m.specificity = rate(m.tn, m.fp + m.tn);
  m.precision = rate(m.tp, m.tp + m.fp);
  return m;
}

std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels, int k,
                                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos.push_back(i);
    } else if (labels[i] == -1) {
      neg.push_back(i);
    } else {
      throw std::invalid_argument("stratified_kfold: labels must be +1/-1");
    }
  }
  for (const auto* cls : {&pos, &neg}) {
    if (static_cast<int>(cls->size()) < k) {
      throw DataError("stratified_kfold: class with " +
                      std::to_string(cls->size()) +
                      " samples is smaller than k = " + std::to_string(k));
    }
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> tests(static_cast<std::size_t>(k));
  int offset = 0;  // rotates so successive classes drop their +1s elsewhere
  for (auto* cls : {&pos, &neg}) {
    rng.shuffle(cls->begin(), cls->end());
    const std::size_t base = cls->size() / static_cast<std::size_t>(k);
    const int rem = static_cast<int>(cls->size() % static_cast<std::size_t>(k));
    std::size_t next = 0;
    for (int f = 0; f < k; ++f) {
      std::size_t take = base;
      if (((f - offset) % k + k) % k < rem) take += 1;
      for (std::size_t j = 0; j < take; ++j) {
        tests[static_cast<std::size_t>(f)].push_back((*cls)[next++]);
      }
    }
    offset = (offset + rem) % k;
  }

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& split = folds[static_cast<std::size_t>(f)];
    split.test = tests[static_cast<std::size_t>(f)];
    std::sort(split.test.begin(), split.test.end());
    std::vector<bool> in_test(labels.size(), false);
    for (std::size_t idx : split.test) in_test[idx] = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!in_test[i]) split.train.push_back(i);
    }
  }
  return folds;
}

RocResult roc_auc(const std::vector<double>& decision,
                  const std::vector<int>& y_true) {
  if (decision.size() != y_true.size()) {
    throw std::invalid_argument("roc_auc: length mismatch");
  }
  std::int64_t n_pos = 0, n_neg = 0;
  for (int t : y_true) {
    if (t == 1) {
      ++n_pos;
    } else if (t == -1) {
      ++n_neg;
    } else {
      throw std::invalid_argument("roc_auc: labels must be +1/-1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_auc: both classes required");
  }
  for (double v : decision) {
    if (std::isnan(v)) throw DataError("roc_auc: NaN decision value");
  }

  std::vector<std::size_t> order(decision.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&decision](std::size_t a, std::size_t b) {
    return decision[a] > decision[b];
  });

  RocResult res;
  res.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  while (i < order.size()) {
    const double threshold = decision[order[i]];
    // Consume the whole tie group so equal scores move tpr and fpr together.
    while (i < order.size() && decision[order[i]] == threshold) {
      (y_true[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    res.points.push_back({fpr, tpr, threshold});
    res.auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  return res;
}

}  // namespace dcal::metrics
