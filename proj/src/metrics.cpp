#include "ideotrack/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "ideotrack/error.hpp"

namespace ideotrack {

std::vector<std::size_t> FoldPlan::training_indices(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed, std::span<const int> labels) {
  if (k < 2 || k > n) {
    throw Error(ErrorKind::too_few_samples,
                "cannot split " + std::to_string(n) + " samples into " + std::to_string(k) + " folds");
  }
  if (!labels.empty() && labels.size() != n) {
    throw Error(ErrorKind::dimension_mismatch, "fold labels do not match sample count");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  if (labels.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  } else {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
    for (auto& [label, members] : groups) {
      std::shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }
  }

  FoldPlan plan;
  plan.seed = seed;
  plan.stratified = !labels.empty();
  plan.folds.resize(k);
  // Dealing the concatenated class runs round-robin keeps both the overall
  // fold sizes and every class's per-fold count within one of each other.
  for (std::size_t p = 0; p < n; ++p) plan.folds[p % k].push_back(order[p]);
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

Eigen::MatrixXd ConfusionMatrix::proportions() const {
  Eigen::MatrixXd out = counts.cast<double>();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double row = out.row(r).sum();
    if (row > 0) out.row(r) /= row;
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted,
                          const std::vector<std::string>& classes) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::dimension_mismatch, "actual and predicted lengths differ");
  }
  const auto k = static_cast<int>(classes.size());
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.setZero(k, k);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const int a = actual[i];
    const int p = predicted[i];
    if (a < 0 || a >= k || p < 0 || p >= k) {
      throw Error(ErrorKind::label_outside_class_list,
                  "label index " + std::to_string(a < 0 || a >= k ? a : p) + " at position " +
                      std::to_string(i));
    }
    ++cm.counts(a, p);
  }
  return cm;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  const auto k = cm.counts.rows();
  if (k == 0) throw Error(ErrorKind::empty_class_row, "confusion matrix has no classes");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto row = cm.counts.row(r).sum();
    if (row == 0) throw Error(ErrorKind::empty_class_row, "no samples of class '" + cm.classes[r] + "'");
    sum += static_cast<double>(cm.counts(r, r)) / static_cast<double>(row);
  }
  return sum / static_cast<double>(k);
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorKind::empty_class_row, "confusion matrix is empty");
  return static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

RocCurve roc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) {
    throw Error(ErrorKind::dimension_mismatch, "scores and labels lengths differ");
  }
  std::size_t positives = 0;
  for (const int p : positive) positives += p != 0;
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::single_class, "ROC needs both positive and negative samples");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // Equal scores move together as one step.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (positive[order[i]] != 0) ++tp; else ++fp;
      ++i;
    }
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return area;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

namespace {

template <typename Matrix, typename Format>
void write_matrix_csv(const ConfusionMatrix& cm, const Matrix& values, std::ostream& out, Format&& format) {
  out << "actual";
  for (const auto& c : cm.classes) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out << cm.classes[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << format(values(r, c));
    out << '\n';
  }
}

}  // namespace

void write_confusion_counts_csv(const ConfusionMatrix& cm, std::ostream& out) {
  write_matrix_csv(cm, cm.counts, out, [](long long v) { return std::to_string(v); });
}

void write_confusion_proportions_csv(const ConfusionMatrix& cm, std::ostream& out) {
  write_matrix_csv(cm, cm.proportions(), out, [](double v) { return format_number(v); });
}

void write_roc_csv(const RocCurve& curve, std::ostream& out) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out << format_number(p.threshold) << ',' << format_number(p.fpr) << ',' << format_number(p.tpr) << '\n';
  }
}

}  // namespace ideotrack
