#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>
#include <json.hpp>

#include "ideotrack/reduce.hpp"

namespace ideotrack {

struct LinearKernel {};
struct RbfKernel {
  double gamma = 1.0;
};
using Kernel = std::variant<LinearKernel, RbfKernel>;

enum class KernelKind { linear, rbf };

KernelKind kind_of(const Kernel& kernel);
std::string to_string(KernelKind kind);
std::optional<KernelKind> parse_kernel_kind(std::string_view text);

double kernel_value(const Kernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);
/// K(a_i, b_j) for rows a_i of `a` and b_j of `b`.
Eigen::MatrixXd gram_matrix(const Kernel& kernel, const Eigen::Ref<const Eigen::MatrixXd>& a,
                            const Eigen::Ref<const Eigen::MatrixXd>& b);

struct SolverOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 1'000'000;
};

/// Solution of max_a sum(a) - 1/2 a^T Q a, Q_ij = y_i y_j K_ij,
/// subject to y^T a = 0 and 0 <= a_i <= upper_i.
struct DualSolution {
  Eigen::VectorXd alpha;
  Eigen::VectorXd upper;
  /// Decision offset: f(x) = sum_i alpha_i y_i K(x_i, x) + bias.
  double bias = 0.0;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// SMO with maximal-violating-pair working set selection.
///
/// Variable i refers to row `rows[i]` of the precomputed `gram`, so repeated
/// rows (up-sampled data) share kernel entries. `y` holds +1 / -1.
/// Equal violations are resolved by the smaller `tie_keys` entry (then by
/// position), so keys derived from row content make the result independent
/// of the order in which rows are supplied.
DualSolution solve_dual(const Eigen::Ref<const Eigen::MatrixXd>& gram, std::span<const Eigen::Index> rows,
                        std::span<const int> y, const Eigen::Ref<const Eigen::VectorXd>& upper,
                        const SolverOptions& options = {}, std::span<const std::size_t> tie_keys = {});

/// Sigmoid p = 1 / (1 + exp(a * score + b)).
struct PlattParams {
  double a = 0.0;
  double b = 0.0;

  double operator()(double score) const;
};

struct BinaryModel {
  Kernel kernel;
  Eigen::MatrixXd support_vectors;  // one row per distinct support vector
  Eigen::VectorXd coefficients;     // summed alpha_i y_i per row
  double bias = 0.0;
  std::optional<PlattParams> calibration;
};

/// Per-class multipliers on C.
struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;

  /// total / (2 * class_count) for each side.
  static ClassWeights balanced(std::span<const int> y);
};

struct BinaryFit {
  BinaryModel model;
  DualSolution dual;
};

/// Soft-margin C-SVC on rows of `x` with labels in {-1, +1}.
/// Throws single_class, non_finite_value, invalid_argument.
BinaryFit fit_binary(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, double c,
                     const Kernel& kernel, const ClassWeights& weights = {}, const SolverOptions& options = {});

inline BinaryModel train_binary(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, double c,
                                const Kernel& kernel, const ClassWeights& weights = {},
                                const SolverOptions& options = {}) {
  return fit_binary(x, y, c, kernel, weights, options).model;
}

double decision(const BinaryModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd decision_rows(const BinaryModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Platt scaling by regularised maximum likelihood (Newton with backtracking).
/// `y` holds +1 / -1. Throws degenerate_calibration for constant scores and
/// single_class when one side is empty.
PlattParams calibrate(std::span<const double> scores, std::span<const int> y);

/// Indices of an up-sampled data set: every class is resampled with
/// replacement to the majority count, majority rows appear exactly once.
/// Classes are ints; output is grouped by ascending class, originals first.
std::vector<std::size_t> upsample_indices(std::span<const int> labels, std::uint64_t seed);

struct Upsampled {
  Eigen::MatrixXd x;
  std::vector<int> y;
};
Upsampled upsample(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, std::uint64_t seed);

enum class WeightMode { none, balanced };

struct TrainOptions {
  WeightMode weights = WeightMode::none;
  /// Replicate minority rows to the majority count; calibration sees the same mix.
  bool upsample = false;
  /// Internal folds used to collect out-of-fold scores for calibration.
  std::size_t calibration_folds = 3;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// One-vs-rest ensemble over integer class ids; a two-class problem is a
/// single machine whose positive side is the larger id. Prediction is the
/// argmax of normalised calibrated probabilities, ties to the larger id.
struct MulticlassModel {
  std::vector<int> classes;  // ascending
  std::vector<BinaryModel> machines;

  Eigen::VectorXd probabilities(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

MulticlassModel train_multiclass(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, double c,
                                 const Kernel& kernel, const TrainOptions& options = {});

/// Index of the largest entry; ties go to the later index.
Eigen::Index argmax_prefer_last(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Optional PCA followed by a multiclass SVM.
struct Classifier {
  std::string feature_kind;
  std::optional<Projection<double>> pca;
  MulticlassModel svm;

  Eigen::VectorXd probabilities(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

nlohmann::json to_json(const BinaryModel& model);
BinaryModel binary_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Classifier& classifier);
Classifier classifier_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Grid search

enum class Metric { balanced_accuracy, accuracy };
std::string to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view text);

struct GridConfig {
  KernelKind kernel = KernelKind::rbf;
  double c = 1.0;
  double gamma = 0.0;  // ignored for linear kernels
  std::optional<Eigen::Index> pca_components;

  Kernel make_kernel() const;
  bool operator==(const GridConfig&) const = default;
};

struct GridSpec {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  std::vector<KernelKind> kernels;
  std::vector<std::optional<Eigen::Index>> pca_components;
  std::size_t folds = 10;
  Metric metric = Metric::balanced_accuracy;
  std::uint64_t seed = 0;
  bool stratified = true;
  bool upsample = true;
  WeightMode weights = WeightMode::none;

  /// C in {2^-3..2^7}, gamma in {2^-7..2^3}, PCA in {2, 8, 32, 128, none},
  /// both kernels, 10 stratified folds, balanced accuracy.
  static GridSpec defaults();
  void validate() const;
  /// Cartesian product; linear kernels ignore the gamma axis.
  std::vector<GridConfig> configurations() const;
};

/// Out-of-fold results of one configuration.
struct CrossValidation {
  Eigen::MatrixXd probabilities;  // n x classes, columns follow `classes`
  std::vector<int> predicted;
  std::vector<int> classes;
};

struct GridCell {
  GridConfig config;
  std::optional<double> metric;
  std::string error;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  CrossValidation best_outcome;

  const GridCell& best_cell() const { return cells[best]; }
};

/// Cross-validates one configuration on fixed folds; PCA, up-sampling and
/// calibration are fitted inside each training fold.
CrossValidation cross_validate(const GridConfig& config, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               std::span<const int> y, const std::vector<std::vector<std::size_t>>& folds,
                               const TrainOptions& options);

/// Every configuration on the same folds; failed cells are recorded, not
/// thrown. Best = highest metric, ties to smaller C, then smaller gamma,
/// then fewer PCA components. Throws invalid_argument if every cell fails.
GridResult grid_search(const GridSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y);

/// Header `kernel,C,gamma,pca_components,metric,error`.
void write_grid_csv(const GridResult& result, std::ostream& out);

}  // namespace ideotrack
