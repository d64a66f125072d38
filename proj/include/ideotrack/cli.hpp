#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>
#include <json.hpp>

#include "ideotrack/experiment.hpp"
#include "ideotrack/svm.hpp"
#include "ideotrack/tracker.hpp"

namespace ideotrack {

struct SynthSettings {
  std::array<std::size_t, 3> persons_per_type = {31, 10, 6};
  std::size_t quotes_per_person = 18;
  Eigen::Index dimension = 16;
  double separation = 5.0;  // pairwise class-mean distance in units of sigma
  double sigma = 1.0;
  Date start_date = make_date(2000, 1, 1);
  int days_between_quotes = 30;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> stopwords;
  FeatureKind feature = FeatureKind::hash;
  Eigen::Index hash_dimension = 256;
  bool month_first = false;
  Task task = Task::threeway;
  GridSpec grid = GridSpec::defaults();
  TrackerConfig tracker;
  std::string author;
  SynthSettings synth;
  int tfidf_n = 1;
  std::size_t tfidf_top = 20;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;

  /// Seed, or invalid_config when none was given.
  std::uint64_t require_seed() const;
};

/// Overlays the keys present in `j` onto `config`. Throws invalid_config.
void apply_config_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

void cmd_synth(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_track(const RunConfig& config);
void cmd_tfidf(const RunConfig& config);

/// Parses arguments (without the program name), runs the subcommand and
/// returns the process exit status: 0 ok, 2 config, 3 data, 4 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ideotrack
