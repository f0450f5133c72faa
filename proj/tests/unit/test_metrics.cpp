#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "dcal/errors.hpp"
#include "dcal/metrics.hpp"
#include "dcal/rng.hpp"
#include "doctest.h"

namespace metrics = dcal::metrics;
using dcal::DataError;
using dcal::Rng;

namespace {

/// O(n^2) Mann-Whitney statistic: fraction of (positive, negative) pairs
/// ranked correctly, ties counting half.
double mann_whitney(const std::vector<double>& dec, const std::vector<int>& y) {
  double u = 0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != -1) continue;
      ++pairs;
      if (dec[i] > dec[j]) {
        u += 1.0;
      } else if (dec[i] == dec[j]) {
        u += 0.5;
      }
    }
  }
  return u / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("metrics: confusion counts and rates on a mixed pattern") {
  const std::vector<int> y_true{1, 1, -1, -1};
  const std::vector<int> y_pred{1, -1, -1, 1};
  auto m = metrics::compute_metrics(y_true, y_pred);
  CHECK(m.tp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.fp == 1);
  CHECK(m.accuracy.defined);
  CHECK(m.accuracy.value == doctest::Approx(0.5));
  CHECK(m.sensitivity.value == doctest::Approx(0.5));
  CHECK(m.specificity.value == doctest::Approx(0.5));
  CHECK(m.precision.value == doctest::Approx(0.5));
}

TEST_CASE("metrics: zero denominators yield undefined rates, not zeros") {
  // All-positive truth: no negatives, so specificity is 0/0.
  auto m = metrics::compute_metrics({1, 1, 1}, {1, 1, 1});
  CHECK(m.specificity.defined == false);
  CHECK(std::isnan(m.specificity.value));
  CHECK(m.sensitivity.value == doctest::Approx(1.0));

  // Never predicting positive: precision is 0/0.
  auto m2 = metrics::compute_metrics({1, -1}, {-1, -1});
  CHECK(m2.precision.defined == false);
  CHECK(std::isnan(m2.precision.value));
  CHECK(m2.specificity.value == doctest::Approx(1.0));

  CHECK_THROWS_AS(metrics::compute_metrics({1, -1}, {1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(metrics::compute_metrics({1, 0}, {1, 1}),
                  std::invalid_argument);
}

TEST_CASE("metrics: stratified folds partition and balance both classes") {
  // 23 positives, 61 negatives, k = 10.
  std::vector<int> labels(84, -1);
  for (int i = 0; i < 23; ++i) labels[static_cast<std::size_t>(i * 3)] = 1;

  auto folds = metrics::stratified_kfold(labels, 10, 99);
  REQUIRE(folds.size() == 10);

  std::set<std::size_t> seen;
  for (const auto& fold : folds) {
    CHECK(std::is_sorted(fold.test.begin(), fold.test.end()));
    CHECK(std::is_sorted(fold.train.begin(), fold.train.end()));
    CHECK(fold.train.size() + fold.test.size() == labels.size());

    int pos = 0, neg = 0;
    for (auto i : fold.test) {
      CHECK(seen.insert(i).second);  // test folds are disjoint
      (labels[i] == 1 ? pos : neg) += 1;
    }
    // Per-class counts off exact proportionality by at most one.
    CHECK(pos >= 2);
    CHECK(pos <= 3);
    CHECK(neg >= 6);
    CHECK(neg <= 7);
    CHECK((pos + neg == 8 || pos + neg == 9));

    // Train and test are complementary.
    std::set<std::size_t> all(fold.train.begin(), fold.train.end());
    for (auto i : fold.test) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
  }
  CHECK(seen.size() == labels.size());
}

TEST_CASE("metrics: fold assignment is seed-deterministic") {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 2 == 0 ? 1 : -1);
  auto a = metrics::stratified_kfold(labels, 5, 7);
  auto b = metrics::stratified_kfold(labels, 5, 7);
  auto c = metrics::stratified_kfold(labels, 5, 8);
  bool same = true, diff = false;
  for (std::size_t f = 0; f < a.size(); ++f) {
    same = same && a[f].test == b[f].test;
    diff = diff || a[f].test != c[f].test;
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("metrics: fold argument validation") {
  std::vector<int> labels{1, 1, 1, -1, -1, -1};
  CHECK_THROWS_AS(metrics::stratified_kfold(labels, 1, 0),
                  std::invalid_argument);
  // A class with fewer members than folds cannot be stratified.
  CHECK_THROWS_AS(metrics::stratified_kfold(labels, 5, 0), DataError);
}

TEST_CASE("metrics: ROC landmarks") {
  // Three of four (positive, negative) pairs ranked correctly -> AUC 0.75.
  const std::vector<double> dec{0.9, 0.4, 0.6, 0.1};
  const std::vector<int> y{1, 1, -1, -1};
  auto roc = metrics::roc_auc(dec, y);
  CHECK(roc.auc == doctest::Approx(0.75).epsilon(1e-12));

  // Curve starts at (0,0) with +inf threshold and ends at (1,1).
  REQUIRE(!roc.points.empty());
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(std::isinf(roc.points.front().threshold));
  CHECK(roc.points.back().fpr == doctest::Approx(1.0));
  CHECK(roc.points.back().tpr == doctest::Approx(1.0));

  // Perfect separation and a fully tied score.
  CHECK(metrics::roc_auc({2.0, 1.0, -1.0, -2.0}, {1, 1, -1, -1}).auc ==
        doctest::Approx(1.0));
  CHECK(metrics::roc_auc({0.5, 0.5}, {1, -1}).auc ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metrics: AUC equals the normalized Mann-Whitney statistic") {
  Rng rng(55);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(40);
    std::vector<double> dec(n);
    std::vector<int> y(n);
    y[0] = 1;
    y[1] = -1;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse integer scores in a third of the trials force heavy ties.
      dec[i] = trial % 3 == 0
                   ? static_cast<double>(rng.uniform_index(5))
                   : rng.uniform(-2.0, 2.0);
      if (i >= 2) y[i] = rng.next_double() < 0.5 ? 1 : -1;
    }
    auto roc = metrics::roc_auc(dec, y);
    CHECK(std::abs(roc.auc - mann_whitney(dec, y)) <= 1e-12);
  }
}

TEST_CASE("metrics: ROC input validation") {
  CHECK_THROWS_AS(metrics::roc_auc({1.0, 2.0}, {1, 1}), DataError);
  CHECK_THROWS_AS(metrics::roc_auc({1.0}, {1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(metrics::roc_auc({std::nan(""), 1.0}, {1, -1}), DataError);
  CHECK_THROWS_AS(metrics::roc_auc({1.0, 2.0}, {1, 2}), std::invalid_argument);
}
