#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ideotrack {

/// Disjoint folds covering 0..n-1, each sorted ascending.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;
  bool stratified = false;

  std::size_t size() const { return folds.size(); }
  /// Every index outside fold `f`, ascending.
  std::vector<std::size_t> training_indices(std::size_t f) const;
};

/// Shuffled k-fold split; fold sizes differ by at most one. When `labels` is
/// non-empty each class is dealt round-robin so per-fold class counts differ
/// by at most one as well. Throws too_few_samples unless 2 <= k <= n.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed, std::span<const int> labels = {});

/// Rows are actual classes, columns predicted.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;

  /// Row-normalised; rows without samples are all zero.
  Eigen::MatrixXd proportions() const;
  long long total() const { return counts.sum(); }
};

/// `actual` and `predicted` hold indices into `classes`.
/// Throws label_outside_class_list or dimension_mismatch.
ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted,
                          const std::vector<std::string>& classes);

/// Mean per-class recall. Throws empty_class_row.
double balanced_accuracy(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// From (0,0) at threshold +inf to (1,1); one point per distinct score.
struct RocCurve {
  std::vector<RocPoint> points;
};

/// `positive[i]` is non-zero for the positive class. Throws single_class.
RocCurve roc(std::span<const double> scores, std::span<const int> positive);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

/// Header row of predicted classes (first cell `actual`), one row per actual class.
void write_confusion_counts_csv(const ConfusionMatrix& cm, std::ostream& out);
void write_confusion_proportions_csv(const ConfusionMatrix& cm, std::ostream& out);
/// Columns threshold, fpr, tpr.
void write_roc_csv(const RocCurve& curve, std::ostream& out);

/// Shortest round-trip decimal form; "inf" / "-inf" / "nan" for non-finite values.
std::string format_number(double value);

}  // namespace ideotrack
