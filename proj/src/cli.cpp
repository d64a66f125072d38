#include "ideotrack/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ideotrack/error.hpp"
#include "ideotrack/featurize.hpp"
#include "ideotrack/metrics.hpp"
#include "ideotrack/reduce.hpp"
#include "ideotrack/report.hpp"

namespace ideotrack {

namespace fs = std::filesystem;
using Eigen::Index;

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw Error(ErrorKind::invalid_config, "a seed is required (--seed or \"seed\" in the config)");
  return *seed;
}

namespace {

template <typename T>
T get(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_config, std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T, typename Parse>
T parse_enum(const std::string& text, Parse parse, const char* what) {
  const auto value = parse(text);
  if (!value) throw Error(ErrorKind::invalid_config, std::string("unknown ") + what + " '" + text + "'");
  return *value;
}

void apply_grid_json(GridSpec& grid, const nlohmann::json& j) {
  if (j.contains("C")) grid.c_values = get<std::vector<double>>(j, "C");
  if (j.contains("gamma")) grid.gamma_values = get<std::vector<double>>(j, "gamma");
  if (j.contains("kernels")) {
    grid.kernels.clear();
    for (const auto& k : get<std::vector<std::string>>(j, "kernels")) {
      grid.kernels.push_back(parse_enum<KernelKind>(k, parse_kernel_kind, "kernel"));
    }
  }
  if (j.contains("pca")) {
    grid.pca_components.clear();
    for (const auto& v : j["pca"]) {
      if (v.is_null()) {
        grid.pca_components.push_back(std::nullopt);
      } else if (v.is_number_integer()) {
        grid.pca_components.push_back(v.get<Index>());
      } else {
        throw Error(ErrorKind::invalid_config, "grid 'pca' entries must be integers or null");
      }
    }
  }
  if (j.contains("folds")) grid.folds = get<std::size_t>(j, "folds");
  if (j.contains("metric")) grid.metric = parse_enum<Metric>(get<std::string>(j, "metric"), parse_metric, "metric");
  if (j.contains("stratified")) grid.stratified = get<bool>(j, "stratified");
  if (j.contains("upsample")) grid.upsample = get<bool>(j, "upsample");
  if (j.contains("weights")) {
    const auto w = get<std::string>(j, "weights");
    if (w == "none") grid.weights = WeightMode::none;
    else if (w == "balanced") grid.weights = WeightMode::balanced;
    else throw Error(ErrorKind::invalid_config, "grid 'weights' must be none or balanced");
  }
}

void apply_tracker_json(RunConfig& config, const nlohmann::json& j) {
  auto& t = config.tracker;
  if (j.contains("process_variance")) t.process_variance = get<double>(j, "process_variance");
  if (j.contains("prior_position_variance")) t.prior_position_variance = get<double>(j, "prior_position_variance");
  if (j.contains("prior_velocity_variance")) t.prior_velocity_variance = get<double>(j, "prior_velocity_variance");
  if (j.contains("alert_threshold")) t.alert_threshold = get<double>(j, "alert_threshold");
  if (j.contains("author")) config.author = get<std::string>(j, "author");
}

void apply_synth_json(SynthSettings& s, const nlohmann::json& j) {
  if (j.contains("persons_per_type")) {
    const auto v = get<std::vector<std::size_t>>(j, "persons_per_type");
    if (v.size() != 3) throw Error(ErrorKind::invalid_config, "persons_per_type needs three counts");
    s.persons_per_type = {v[0], v[1], v[2]};
  }
  if (j.contains("quotes_per_person")) s.quotes_per_person = get<std::size_t>(j, "quotes_per_person");
  if (j.contains("dimension")) s.dimension = get<Index>(j, "dimension");
  if (j.contains("separation")) s.separation = get<double>(j, "separation");
  if (j.contains("sigma")) s.sigma = get<double>(j, "sigma");
  if (j.contains("start_date")) {
    try {
      s.start_date = parse_date(get<std::string>(j, "start_date"));
    } catch (const Error& e) {
      throw Error(ErrorKind::invalid_config, std::string("synth start_date: ") + e.what());
    }
  }
  if (j.contains("days_between_quotes")) s.days_between_quotes = get<int>(j, "days_between_quotes");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream buffer;
  writer(buffer);
  write_file(path, buffer.str());
}

void prepare_out(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + config.out.string() + ": " + ec.message());
}

Corpus load_configured_corpus(const RunConfig& config) {
  if (config.corpus.empty()) throw Error(ErrorKind::invalid_config, "no corpus given (--corpus or \"corpus\")");
  return load_corpus(config.corpus, DateParseOptions{config.month_first, std::nullopt});
}

/// Checks the pieces of the config every feature-based command needs before
/// any file is read.
void validate_features(const RunConfig& config) {
  if (config.feature == FeatureKind::embedding && !config.embeddings) {
    throw Error(ErrorKind::invalid_config, "feature 'embedding' needs an embeddings path");
  }
  if (config.feature == FeatureKind::hash && config.hash_dimension < 2) {
    throw Error(ErrorKind::invalid_config, "hash_dimension must be at least 2");
  }
}

struct LoadedFeatures {
  StopWords stopwords;
  std::optional<EmbeddingMatrix> embeddings;
  Eigen::MatrixXd x;
};

LoadedFeatures load_features(const RunConfig& config, const Corpus& corpus) {
  LoadedFeatures f;
  f.stopwords = config.stopwords ? load_stopwords(*config.stopwords) : default_stopwords();
  if (config.feature == FeatureKind::embedding) f.embeddings = load_embeddings(*config.embeddings);
  FeatureOptions options;
  options.kind = config.feature;
  options.embeddings = f.embeddings ? &*f.embeddings : nullptr;
  options.stopwords = &f.stopwords;
  options.hash_dimension = config.hash_dimension;
  options.hash_seed = 0;
  f.x = build_features(corpus, options);
  return f;
}

/// Labelled rows of the corpus and their label indices.
std::pair<std::vector<Index>, std::vector<int>> labelled_rows(const Corpus& corpus) {
  std::vector<Index> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].label) {
      rows.push_back(static_cast<Index>(i));
      y.push_back(static_cast<int>(index_of(*corpus[i].label)));
    }
  }
  return {rows, y};
}

}  // namespace

void apply_config_json(RunConfig& config, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_config, "config must be a JSON object");
  if (j.contains("corpus")) config.corpus = get<std::string>(j, "corpus");
  if (j.contains("embeddings")) {
    if (j["embeddings"].is_null()) config.embeddings.reset();
    else config.embeddings = get<std::string>(j, "embeddings");
  }
  if (j.contains("stopwords")) config.stopwords = get<std::string>(j, "stopwords");
  if (j.contains("feature")) {
    config.feature = parse_enum<FeatureKind>(get<std::string>(j, "feature"), parse_feature_kind, "feature kind");
  }
  if (j.contains("hash_dimension")) config.hash_dimension = get<Index>(j, "hash_dimension");
  if (j.contains("month_first")) config.month_first = get<bool>(j, "month_first");
  if (j.contains("task")) config.task = parse_enum<Task>(get<std::string>(j, "task"), parse_task, "task");
  if (j.contains("grid")) apply_grid_json(config.grid, j["grid"]);
  if (j.contains("tracker")) apply_tracker_json(config, j["tracker"]);
  if (j.contains("synth")) apply_synth_json(config.synth, j["synth"]);
  if (j.contains("tfidf")) {
    const auto& t = j["tfidf"];
    if (t.contains("n")) config.tfidf_n = get<int>(t, "n");
    if (t.contains("top")) config.tfidf_top = get<std::size_t>(t, "top");
  }
  if (j.contains("out")) config.out = get<std::string>(j, "out");
  if (j.contains("seed")) config.seed = get<std::uint64_t>(j, "seed");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_config, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_config, "config " + path.string() + ": " + e.what());
  }
  RunConfig config;
  apply_config_json(config, j);
  return config;
}

void cmd_synth(const RunConfig& config) {
  const auto seed = config.require_seed();
  const auto& s = config.synth;
  SyntheticConfig cfg = SyntheticConfig::reference(s.dimension, s.separation, s.sigma);
  cfg.persons_per_type = s.persons_per_type;
  cfg.quotes_per_person = s.quotes_per_person;
  cfg.seed = seed;
  cfg.start_date = s.start_date;
  cfg.days_between_quotes = s.days_between_quotes;
  const auto data = generate_synthetic(cfg);
  prepare_out(config);
  save_corpus(data.corpus, config.out / "corpus.jsonl");
  save_embeddings(data.embeddings, config.out / "embeddings.jsonl");
}

void cmd_eval(const RunConfig& config) {
  const auto seed = config.require_seed();
  validate_features(config);
  GridSpec grid = config.grid;
  grid.seed = seed;
  grid.validate();

  const Corpus corpus = load_configured_corpus(config);
  const auto features = load_features(config, corpus);
  const TaskData data = select_task(corpus, config.task);
  const auto report = run_experiment(features.x, data, config.task, grid);

  prepare_out(config);
  write_with(config.out / "confusion_counts.csv", [&](std::ostream& o) { write_confusion_counts_csv(report.confusion, o); });
  write_with(config.out / "confusion_proportions.csv",
             [&](std::ostream& o) { write_confusion_proportions_csv(report.confusion, o); });
  write_with(config.out / "grid.csv", [&](std::ostream& o) { write_grid_csv(report.grid, o); });
  for (const auto& r : report.rocs) {
    const auto name = config.task == Task::threeway ? "roc_" + r.positive + ".csv" : std::string("roc.csv");
    write_with(config.out / name, [&](std::ostream& o) { write_roc_csv(r.curve, o); });
  }
  write_file(config.out / "summary.json", summary_json(report).dump(2) + "\n");

  // Overview scatter: LDA over every labelled quote.
  const auto [rows, y] = labelled_rows(corpus);
  std::vector<int> present(y);
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  const Eigen::MatrixXd x = features.x(rows, Eigen::all);
  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(x.rows(), 2);
  if (present.size() >= 2) {
    const auto lda = fit_lda(x, std::span<const int>(y), std::min<Index>(2, static_cast<Index>(present.size()) - 1));
    const Eigen::MatrixXd projected = project_rows(lda, x);
    points.leftCols(projected.cols()) = projected;
  }
  write_with(config.out / "scatter.svg", [&](std::ostream& o) {
    write_scatter_svg(o, points, y, {"c", "e", "t"}, "LDA projection of labelled quotes");
  });
}

void cmd_track(const RunConfig& config) {
  config.require_seed();
  validate_features(config);
  config.tracker.validate();
  if (config.author.empty()) throw Error(ErrorKind::invalid_config, "no author given (--author or tracker.author)");

  const Corpus corpus = load_configured_corpus(config);
  if (!corpus.has_author(config.author)) throw Error(ErrorKind::unknown_author, "no quotes by '" + config.author + "'");
  const auto features = load_features(config, corpus);

  const auto [rows, y] = labelled_rows(corpus);
  const Eigen::MatrixXd labelled = features.x(rows, Eigen::all);
  const auto lda = fit_lda(labelled, std::span<const int>(y), 2);
  if (lda.basis.cols() != 2) throw Error(ErrorKind::single_class, "tracking needs all three labels in the corpus");
  const Eigen::MatrixXd projected = project_rows(lda, features.x);

  const auto stats = fit_class_stats(corpus, projected);
  const auto regions = fit_region_classifier(projected(rows, Eigen::all), y);
  const auto trajectory = track_author(corpus, config.author, projected, stats, config.tracker);
  const auto alerts = alert(trajectory, regions, config.tracker.alert_threshold);

  prepare_out(config);
  write_with(config.out / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(trajectory, alerts, o); });
  write_with(config.out / "track_regions.svg", [&](std::ostream& o) {
    write_track_regions_svg(o, trajectory, regions, "Tracked state of " + config.author);
  });
  write_with(config.out / "track_time.svg", [&](std::ostream& o) {
    write_track_time_svg(o, trajectory, "Dimension 2 over time for " + config.author);
  });
  write_file(config.out / "class_stats.json", to_json(stats).dump(2) + "\n");
  write_file(config.out / "projection.json", to_json(lda).dump(2) + "\n");
}

void cmd_tfidf(const RunConfig& config) {
  config.require_seed();
  if (config.tfidf_n != 1 && config.tfidf_n != 2) throw Error(ErrorKind::invalid_config, "tfidf n must be 1 or 2");
  const Corpus corpus = load_configured_corpus(config);
  const StopWords stopwords = config.stopwords ? load_stopwords(*config.stopwords) : default_stopwords();
  const auto scores = tfidf_by_category(corpus, config.tfidf_n, stopwords);

  prepare_out(config);
  write_with(config.out / "tfidf.csv", [&](std::ostream& o) {
    o << "category,rank,term,score\n";
    for (const auto label : kLabels) {
      std::size_t rank = 1;
      for (const auto& [term, score] : scores.top_terms(label, config.tfidf_top)) {
        o << to_char(label) << ',' << rank++ << ',' << term << ',' << format_number(score) << '\n';
      }
    }
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ideology classification and state-of-mind tracking for time-stamped statements"};
  app.set_help_all_flag("--help-all");
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Outputs written to --out:\n"
      "  synth: corpus.jsonl, embeddings.jsonl\n"
      "  eval:  confusion_counts.csv, confusion_proportions.csv, grid.csv, roc.csv (binary tasks)\n"
      "         or roc_<class>.csv (threeway), summary.json, scatter.svg\n"
      "  track: trajectory.csv, track_regions.svg, track_time.svg, class_stats.json, projection.json\n"
      "  tfidf: tfidf.csv\n"
      "Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--seed", seed, "Random seed (required)");
  app.add_option("--out", out_dir, "Output directory");

  std::string corpus, embeddings, feature, task, author, stopwords;
  std::optional<std::size_t> top;
  std::optional<int> ngram;
  std::optional<double> threshold;
  const auto add_data_options = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus, "Corpus JSONL");
    sub->add_option("--stopwords", stopwords, "Stop-word list, one token per line");
  };
  const auto add_feature_options = [&](CLI::App* sub) {
    add_data_options(sub);
    sub->add_option("--embeddings", embeddings, "Embeddings JSONL");
    sub->add_option("--feature", feature, "unigram | bigram | embedding | hash");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and embeddings");
  auto* eval = app.add_subcommand("eval", "Grid-searched cross-validation report");
  add_feature_options(eval);
  eval->add_option("--task", task, "threeway | detect_terrorist | detect_extremist");
  auto* track = app.add_subcommand("track", "Track one author through the 2-D LDA space");
  add_feature_options(track);
  track->add_option("--author", author, "Author to track");
  track->add_option("--threshold", threshold, "Alert threshold on p(terrorist)");
  auto* tfidf = app.add_subcommand("tfidf", "Top TF-IDF terms per category");
  add_data_options(tfidf);
  tfidf->add_option("--top", top, "Terms per category");
  tfidf->add_option("--ngram", ngram, "1 or 2");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "InvalidConfig: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) config.seed = seed;
    if (!out_dir.empty()) config.out = out_dir;
    if (!corpus.empty()) config.corpus = corpus;
    if (!embeddings.empty()) config.embeddings = embeddings;
    if (!stopwords.empty()) config.stopwords = stopwords;
    if (!feature.empty()) config.feature = parse_enum<FeatureKind>(feature, parse_feature_kind, "feature kind");
    if (!task.empty()) config.task = parse_enum<Task>(task, parse_task, "task");
    if (!author.empty()) config.author = author;
    if (threshold) config.tracker.alert_threshold = *threshold;
    if (top) config.tfidf_top = *top;
    if (ngram) config.tfidf_n = *ngram;

    if (synth->parsed()) cmd_synth(config);
    else if (eval->parsed()) cmd_eval(config);
    else if (track->parsed()) cmd_track(config);
    else if (tfidf->parsed()) cmd_tfidf(config);
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "IoError: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace ideotrack
