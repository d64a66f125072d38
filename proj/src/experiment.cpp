#include "ideotrack/experiment.hpp"

#include <algorithm>

#include "ideotrack/error.hpp"

namespace ideotrack {

using Eigen::Index;

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::unigram: return "unigram";
    case FeatureKind::bigram: return "bigram";
    case FeatureKind::embedding: return "embedding";
    case FeatureKind::hash: return "hash";
  }
  return "hash";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view text) {
  for (const auto kind : {FeatureKind::unigram, FeatureKind::bigram, FeatureKind::embedding, FeatureKind::hash}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

Eigen::MatrixXd build_features(const Corpus& corpus, const FeatureOptions& options) {
  const StopWords& stopwords = options.stopwords ? *options.stopwords : default_stopwords();
  switch (options.kind) {
    case FeatureKind::unigram:
    case FeatureKind::bigram: {
      const int n = options.kind == FeatureKind::unigram ? 1 : 2;
      const auto vocab = build_vocabulary(corpus, n, stopwords);
      return count_matrix(corpus, vocab, stopwords);
    }
    case FeatureKind::embedding: {
      if (!options.embeddings) throw Error(ErrorKind::invalid_config, "embedding features need an embeddings file");
      const auto ids = corpus.ids();
      for (const auto& id : ids) {
        if (!options.embeddings->contains(id)) throw Error(ErrorKind::schema, "no embedding for quote '" + id + "'");
      }
      return options.embeddings->rows(ids);
    }
    case FeatureKind::hash: {
      if (options.hash_dimension < 2) throw Error(ErrorKind::invalid_config, "hash dimension must be at least 2");
      Eigen::MatrixXd out(static_cast<Index>(corpus.size()), options.hash_dimension);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        out.row(static_cast<Index>(i)) = hash_encode(corpus[i].text, options.hash_dimension, options.hash_seed);
      }
      return out;
    }
  }
  throw Error(ErrorKind::invalid_config, "unknown feature kind");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::threeway: return "threeway";
    case Task::detect_terrorist: return "detect_terrorist";
    case Task::detect_extremist: return "detect_extremist";
  }
  return "threeway";
}

std::optional<Task> parse_task(std::string_view text) {
  for (const auto task : {Task::threeway, Task::detect_terrorist, Task::detect_extremist}) {
    if (text == to_string(task)) return task;
  }
  return std::nullopt;
}

TaskData select_task(const Corpus& corpus, Task task) {
  TaskData data;
  switch (task) {
    case Task::threeway: data.class_names = {"c", "e", "t"}; break;
    case Task::detect_terrorist: data.class_names = {"not_t", "t"}; break;
    case Task::detect_extremist: data.class_names = {"c", "e"}; break;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& label = corpus[i].label;
    if (!label) {
      ++data.unlabelled;
      continue;
    }
    int y = static_cast<int>(index_of(*label));
    if (task == Task::detect_terrorist) {
      y = *label == Label::terrorist ? 1 : 0;
    } else if (task == Task::detect_extremist && *label == Label::terrorist) {
      ++data.excluded_terrorist;
      continue;
    }
    data.indices.push_back(i);
    data.y.push_back(y);
  }
  return data;
}

ExperimentReport run_experiment(const Eigen::Ref<const Eigen::MatrixXd>& features, const TaskData& data, Task task,
                                const GridSpec& grid) {
  std::vector<Index> rows(data.indices.begin(), data.indices.end());
  for (const auto r : rows) {
    if (r >= features.rows()) throw Error(ErrorKind::dimension_mismatch, "task row outside the feature matrix");
  }
  const Eigen::MatrixXd x = features(rows, Eigen::all);

  ExperimentReport report;
  report.task = task;
  report.data = data;
  report.grid = grid_search(grid, x, data.y);
  const auto& outcome = report.grid.best_outcome;

  // Classes present in the task data map onto the task's class list.
  std::vector<int> predicted(outcome.predicted.begin(), outcome.predicted.end());
  report.confusion = confusion(data.y, predicted, data.class_names);
  report.balanced_accuracy = balanced_accuracy(report.confusion);

  const auto add_curve = [&](int positive) {
    const auto column = std::find(outcome.classes.begin(), outcome.classes.end(), positive) - outcome.classes.begin();
    std::vector<double> scores(data.y.size());
    std::vector<int> truth(data.y.size());
    for (std::size_t i = 0; i < data.y.size(); ++i) {
      scores[i] = outcome.probabilities(static_cast<Index>(i), column);
      truth[i] = data.y[i] == positive ? 1 : 0;
    }
    NamedRoc named;
    named.positive = data.class_names[static_cast<std::size_t>(positive)];
    named.curve = roc(scores, truth);
    named.area = auc(named.curve);
    report.rocs.push_back(std::move(named));
  };
  if (task == Task::threeway) {
    for (const int c : outcome.classes) add_curve(c);
  } else {
    add_curve(1);
  }
  return report;
}

nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["task"] = to_string(report.task);
  j["classes"] = report.data.class_names;
  j["evaluated"] = report.data.indices.size();
  j["unlabelled_skipped"] = report.data.unlabelled;
  if (report.task == Task::detect_extremist) j["excluded_terrorist_quotes"] = report.data.excluded_terrorist;
  std::vector<long long> counts(report.data.class_names.size(), 0);
  for (const int y : report.data.y) ++counts[static_cast<std::size_t>(y)];
  j["class_counts"] = counts;

  const auto& best = report.grid.best_cell();
  nlohmann::ordered_json config;
  config["kernel"] = to_string(best.config.kernel);
  config["C"] = best.config.c;
  if (best.config.kernel == KernelKind::rbf) config["gamma"] = best.config.gamma;
  config["pca_components"] = best.config.pca_components ? nlohmann::json(*best.config.pca_components) : nlohmann::json(nullptr);
  j["best"] = config;
  j["best_metric"] = *best.metric;
  std::size_t failed = 0;
  for (const auto& cell : report.grid.cells) failed += cell.metric ? 0 : 1;
  j["grid_cells"] = report.grid.cells.size();
  j["grid_failed_cells"] = failed;
  j["balanced_accuracy"] = report.balanced_accuracy;
  j["accuracy"] = accuracy(report.confusion);
  nlohmann::ordered_json aucs;
  for (const auto& r : report.rocs) aucs[r.positive] = r.area;
  j["auc"] = aucs;
  return j;
}

}  // namespace ideotrack
