#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>
#include <json.hpp>

#include "ideotrack/corpus.hpp"
#include "ideotrack/featurize.hpp"
#include "ideotrack/metrics.hpp"
#include "ideotrack/svm.hpp"

namespace ideotrack {

enum class FeatureKind { unigram, bigram, embedding, hash };
std::string to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view text);

struct FeatureOptions {
  FeatureKind kind = FeatureKind::hash;
  const EmbeddingMatrix* embeddings = nullptr;  // required for FeatureKind::embedding
  const StopWords* stopwords = nullptr;         // defaults to the built-in list
  Eigen::Index hash_dimension = 256;
  std::uint64_t hash_seed = 0;
};

/// One row per quote of the corpus. n-gram vocabularies are built over the
/// whole corpus, which uses no labels.
Eigen::MatrixXd build_features(const Corpus& corpus, const FeatureOptions& options);

enum class Task { threeway, detect_terrorist, detect_extremist };
std::string to_string(Task task);
std::optional<Task> parse_task(std::string_view text);

/// The quotes and integer classes a task evaluates.
struct TaskData {
  std::vector<std::size_t> indices;  // corpus rows, ascending
  std::vector<int> y;
  std::vector<std::string> class_names;
  std::size_t unlabelled = 0;         // quotes without a label, skipped
  std::size_t excluded_terrorist = 0; // t quotes removed by detect_extremist
};

/// threeway: c=0, e=1, t=2. detect_terrorist: not_t=0, t=1.
/// detect_extremist: c=0, e=1 with every t quote removed first.
TaskData select_task(const Corpus& corpus, Task task);

struct NamedRoc {
  std::string positive;
  RocCurve curve;
  double area = 0.0;
};

struct ExperimentReport {
  Task task = Task::threeway;
  TaskData data;
  GridResult grid;
  ConfusionMatrix confusion;  // pooled over folds
  double balanced_accuracy = 0.0;
  /// One curve for binary tasks (positive class), one per class for threeway.
  std::vector<NamedRoc> rocs;
};

/// Grid search by cross-validation over the task's rows of `features`;
/// the best configuration's out-of-fold predictions give the pooled
/// confusion matrix and ROC curves.
ExperimentReport run_experiment(const Eigen::Ref<const Eigen::MatrixXd>& features, const TaskData& data, Task task,
                                const GridSpec& grid);

nlohmann::json summary_json(const ExperimentReport& report);

}  // namespace ideotrack
