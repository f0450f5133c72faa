#include "dcal/classify.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dcal/errors.hpp"

namespace dcal::classify {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_rate(const metrics::Rate& r) {
  return r.defined ? fmt(r.value) : "nan";
}

metrics::Rate mean_over_folds(const std::vector<FoldResult>& folds,
                              metrics::Rate metrics::ConfusionMetrics::* field) {
  double sum = 0.0;
  int defined = 0;
  for (const auto& f : folds) {
    const metrics::Rate& r = f.cm.*field;
    if (r.defined) {
      sum += r.value;
      ++defined;
    }
  }
  if (defined == 0) {
    return {std::numeric_limits<double>::quiet_NaN(), false};
  }
  return {sum / defined, true};
}

}  // namespace

EvaluationReport evaluate(const features::FeatureMatrix& fm, int k,
                          std::uint64_t seed, double c) {
  if (fm.n < 2) throw DataError("evaluate: need at least 2 samples");
  std::vector<int> labels(fm.labels.begin(), fm.labels.end());

  EvaluationReport report;
  report.k = k;
  report.seed = seed;
  report.svm_c = c;
  report.fusion = fm.fusion;

  const auto folds = metrics::stratified_kfold(labels, k, seed);
  std::vector<double> pooled_decisions;
  std::vector<int> pooled_true, pooled_pred;

  svm::FitOptions opts;
  opts.c = c;
  for (const auto& split : folds) {
    const std::int64_t n_train = static_cast<std::int64_t>(split.train.size());
    const std::int64_t n_test = static_cast<std::int64_t>(split.test.size());
    std::vector<double> x_train(static_cast<std::size_t>(n_train * fm.d));
    std::vector<int> y_train(static_cast<std::size_t>(n_train));
    for (std::int64_t i = 0; i < n_train; ++i) {
      const std::size_t src = split.train[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < fm.d; ++j) {
        x_train[static_cast<std::size_t>(i * fm.d + j)] =
            static_cast<double>(fm.rows[src * fm.d + j]);
      }
      y_train[static_cast<std::size_t>(i)] = labels[src];
    }
    const svm::SvmModel model = svm::svm_train(x_train, n_train, fm.d, y_train, opts);

    std::vector<double> x_test(static_cast<std::size_t>(n_test * fm.d));
    FoldResult fold;
    fold.y_true.resize(static_cast<std::size_t>(n_test));
    for (std::int64_t i = 0; i < n_test; ++i) {
      const std::size_t src = split.test[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < fm.d; ++j) {
        x_test[static_cast<std::size_t>(i * fm.d + j)] =
            static_cast<double>(fm.rows[src * fm.d + j]);
      }
      fold.y_true[static_cast<std::size_t>(i)] = labels[src];
    }
    fold.decisions = svm::svm_decision(model, x_test, n_test, fm.d);
    std::vector<int> y_pred(fold.decisions.size());
    for (std::size_t i = 0; i < y_pred.size(); ++i) {
      y_pred[i] = fold.decisions[i] >= 0.0 ? 1 : -1;
    }
    fold.cm = metrics::compute_metrics(fold.y_true, y_pred);
    fold.auc = metrics::roc_auc(fold.decisions, fold.y_true).auc;

    pooled_decisions.insert(pooled_decisions.end(), fold.decisions.begin(),
                            fold.decisions.end());
    pooled_true.insert(pooled_true.end(), fold.y_true.begin(), fold.y_true.end());
    pooled_pred.insert(pooled_pred.end(), y_pred.begin(), y_pred.end());
    report.folds.push_back(std::move(fold));
  }

  report.mean_accuracy =
      mean_over_folds(report.folds, &metrics::ConfusionMetrics::accuracy);
  report.mean_sensitivity =
      mean_over_folds(report.folds, &metrics::ConfusionMetrics::sensitivity);
  report.mean_specificity =
      mean_over_folds(report.folds, &metrics::ConfusionMetrics::specificity);
  report.mean_precision =
      mean_over_folds(report.folds, &metrics::ConfusionMetrics::precision);
  double auc_sum = 0.0;
  for (const auto& f : report.folds) auc_sum += f.auc;
  report.mean_auc = auc_sum / static_cast<double>(report.folds.size());

  report.pooled = metrics::compute_metrics(pooled_true, pooled_pred);
  report.pooled_roc = metrics::roc_auc(pooled_decisions, pooled_true);
  return report;
}

std::vector<GridCell> evaluate_grid(
    const std::vector<features::FeatureMatrix>& per_fusion,
    const std::vector<int>& ks, std::uint64_t seed, double c) {
  if (per_fusion.empty() || ks.empty()) {
    throw ConfigError("evaluate_grid: empty fusion or k list");
  }
  for (const auto& fm : per_fusion) {
    if (fm.labels != per_fusion.front().labels) {
      throw DataError("evaluate_grid: feature matrices disagree on labels");
    }
  }
  std::vector<GridCell> grid;
  for (const auto& fm : per_fusion) {
    for (int k : ks) {
      grid.push_back({fm.fusion, k, evaluate(fm, k, seed, c)});
    }
  }
  return grid;
}

void write_report_csv(const std::string& path, const EvaluationReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("write_report_csv: cannot open '" + path + "'");
  os << "fold,tp,fp,fn,tn,accuracy,sensitivity,specificity,precision,auc\n";
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& f = report.folds[i];
    os << (i + 1) << "," << f.cm.tp << "," << f.cm.fp << "," << f.cm.fn << ","
       << f.cm.tn << "," << fmt_rate(f.cm.accuracy) << ","
       << fmt_rate(f.cm.sensitivity) << "," << fmt_rate(f.cm.specificity)
       << "," << fmt_rate(f.cm.precision) << "," << fmt(f.auc) << "\n";
    tp += f.cm.tp;
    fp += f.cm.fp;
    fn += f.cm.fn;
    tn += f.cm.tn;
  }
  const double nf = static_cast<double>(report.folds.size());
  os << "mean," << fmt(tp / nf) << "," << fmt(fp / nf) << "," << fmt(fn / nf)
     << "," << fmt(tn / nf) << "," << fmt_rate(report.mean_accuracy) << ","
     << fmt_rate(report.mean_sensitivity) << ","
     << fmt_rate(report.mean_specificity) << ","
     << fmt_rate(report.mean_precision) << "," << fmt(report.mean_auc) << "\n";
  if (!os) throw DataError("write_report_csv: write failed");
}

void write_roc_csv(const std::string& path, const metrics::RocResult& roc) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("write_roc_csv: cannot open '" + path + "'");
  os << "fpr,tpr,threshold\n";
  for (const auto& p : roc.points) {
    os << fmt(p.fpr) << "," << fmt(p.tpr) << "," << fmt(p.threshold) << "\n";
  }
  if (!os) throw DataError("write_roc_csv: write failed");
}

void write_grid_csv(const std::string& path, const std::vector<GridCell>& grid) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("write_grid_csv: cannot open '" + path + "'");
  os << "fusion,k,mean_accuracy,mean_sensitivity,mean_specificity,"
        "mean_precision,mean_auc,pooled_accuracy,pooled_auc\n";
  for (const auto& cell : grid) {
    os << models::to_string(cell.fusion) << "," << cell.k << ","
       << fmt_rate(cell.report.mean_accuracy) << ","
       << fmt_rate(cell.report.mean_sensitivity) << ","
       << fmt_rate(cell.report.mean_specificity) << ","
       << fmt_rate(cell.report.mean_precision) << ","
       << fmt(cell.report.mean_auc) << ","
       << fmt_rate(cell.report.pooled.accuracy) << ","
       << fmt(cell.report.pooled_roc.auc) << "\n";
  }
  if (!os) throw DataError("write_grid_csv: write failed");
}

std::string report_text(const EvaluationReport& report) {
  std::ostringstream os;
  os << "fusion " << models::to_string(report.fusion) << ", k = " << report.k
     << ", seed = " << report.seed << ", C = " << report.svm_c << "\n";
  os << "fold-mean: accuracy " << fmt_rate(report.mean_accuracy)
     << ", sensitivity " << fmt_rate(report.mean_sensitivity)
     << ", specificity " << fmt_rate(report.mean_specificity) << ", precision "
     << fmt_rate(report.mean_precision) << ", auc " << fmt(report.mean_auc)
     << "\n";
  os << "pooled:    accuracy " << fmt_rate(report.pooled.accuracy)
     << ", sensitivity " << fmt_rate(report.pooled.sensitivity)
     << ", specificity " << fmt_rate(report.pooled.specificity)
     << ", precision " << fmt_rate(report.pooled.precision) << ", auc "
     << fmt(report.pooled_roc.auc) << "\n";
  os << "confusion (pooled): tp " << report.pooled.tp << " fp "
     << report.pooled.fp << " fn " << report.pooled.fn << " tn "
     << report.pooled.tn << "\n";
  return os.str();
}

}  // namespace dcal::classify
