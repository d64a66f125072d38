#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ideotrack/date.hpp"
#include "ideotrack/embedding.hpp"

namespace ideotrack {

/// Ideology category. Underlying values follow severity, so `<` orders
/// centrist < extremist < terrorist.
enum class Label : std::uint8_t { centrist = 0, extremist = 1, terrorist = 2 };

inline constexpr std::array<Label, 3> kLabels = {Label::centrist, Label::extremist, Label::terrorist};
inline constexpr std::size_t kLabelCount = kLabels.size();

constexpr std::size_t index_of(Label label) { return static_cast<std::size_t>(label); }
constexpr Label label_at(std::size_t index) { return static_cast<Label>(index); }

/// "c", "e" or "t".
char to_char(Label label);
std::optional<Label> parse_label(std::string_view text);

struct Quote {
  std::string id;
  std::string author;
  std::optional<Label> author_type;
  std::string text;
  Date date;
  std::optional<Label> label;
  std::optional<std::string> source;
};

/// Immutable, validated collection of quotes with a per-author index.
class Corpus {
public:
  Corpus() = default;
  /// Validates ids, text and dates; throws duplicate_id or schema.
  explicit Corpus(std::vector<Quote> quotes);

  std::size_t size() const { return quotes_.size(); }
  bool empty() const { return quotes_.empty(); }
  const Quote& operator[](std::size_t i) const { return quotes_[i]; }
  const std::vector<Quote>& quotes() const { return quotes_; }
  auto begin() const { return quotes_.begin(); }
  auto end() const { return quotes_.end(); }

  std::optional<std::size_t> find(std::string_view id) const;

  /// Author names in lexicographic order.
  std::vector<std::string> authors() const;
  bool has_author(const std::string& author) const { return by_author_.contains(author); }
  /// Quote indices of one author ordered by (date, id).
  std::span<const std::size_t> author_quotes(const std::string& author) const;

  /// Counts of labelled quotes per category (unlabelled quotes are skipped).
  std::array<std::size_t, kLabelCount> label_counts() const;

  std::vector<std::string> ids() const;

private:
  std::vector<Quote> quotes_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_author_;
};

/// Reads the JSONL corpus format. Dates may be ISO or any form accepted by
/// parse_date. Throws io, schema (with line and field), or duplicate_id.
Corpus load_corpus(const std::filesystem::path& path, const DateParseOptions& dates = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Majority of three ratings; when all three differ, the middle severity.
Label merge_ratings(Label r1, Label r2, Label r3);

struct Rating {
  Label r1, r2, r3;
};

/// Reads JSONL records `{"id", "r1", "r2", "r3"}`.
std::map<std::string, Rating> load_ratings(const std::filesystem::path& path);

/// Returns a copy of `corpus` with each rated quote labelled by merge_ratings.
/// Throws schema for ratings that name unknown quotes.
Corpus apply_ratings(const Corpus& corpus, const std::map<std::string, Rating>& ratings);

struct ClassGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct SyntheticConfig {
  /// p(statement type s | person type k); rows s, columns k.
  Eigen::Matrix3d statement_given_person;
  Eigen::Vector3d person_prior;
  std::array<ClassGaussian, kLabelCount> classes;
  std::array<std::size_t, kLabelCount> persons_per_type{};
  std::size_t quotes_per_person = 0;
  std::uint64_t seed = 0;
  Date start_date = make_date(2000, 1, 1);
  int days_between_quotes = 30;

  /// Throws invalid_config when probabilities or covariances are malformed.
  void validate() const;

  /// Mixing matrix and person prior tabulated from the reference dataset, with
  /// class means on a regular simplex whose pairwise distance is
  /// `separation * sigma` and isotropic covariance `sigma^2 I`.
  static SyntheticConfig reference(Eigen::Index dimension, double separation, double sigma = 1.0);
};

struct SyntheticData {
  Corpus corpus;
  EmbeddingMatrix embeddings;
};

/// Samples persons of each type, then each quote's statement type from
/// p(s|k) and its vector from the class-s Gaussian. Deterministic in `seed`.
SyntheticData generate_synthetic(const SyntheticConfig& config);

/// Word lists used for synthetic quote text, one per category plus a shared list.
const std::array<std::vector<std::string>, kLabelCount>& synthetic_vocabulary();
const std::vector<std::string>& synthetic_shared_vocabulary();

}  // namespace ideotrack
