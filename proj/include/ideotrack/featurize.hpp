#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ideotrack/corpus.hpp"

namespace ideotrack {

using Tokens = std::vector<std::string>;
using StopWords = std::unordered_set<std::string>;
/// One or two consecutive tokens.
using NGram = std::vector<std::string>;

/// Lowercased tokens split on every non-alphanumeric code point (UTF-8 aware).
Tokens tokenize(std::string_view text);

/// Removes stop words, then forms contiguous n-grams over what remains.
std::vector<NGram> extract_ngrams(const Tokens& tokens, int n, const StopWords& stopwords);

/// Joins an n-gram with single spaces; tokens never contain spaces.
std::string ngram_key(const NGram& ngram);

/// Built-in English list shipped in data/stopwords_en.txt.
const StopWords& default_stopwords();
/// One token per line; blank lines and '#' comments are ignored.
StopWords load_stopwords(const std::filesystem::path& path);

class Vocabulary {
public:
  explicit Vocabulary(int n) : n_(n) {}

  int n() const { return n_; }
  std::size_t size() const { return terms_.size(); }
  /// Appends when new; returns the column index either way.
  std::size_t add(const NGram& ngram);
  std::optional<std::size_t> index_of(const NGram& ngram) const;
  const NGram& term(std::size_t index) const { return terms_[index]; }
  const std::vector<NGram>& terms() const { return terms_; }

private:
  int n_;
  std::vector<NGram> terms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Column indices in first-occurrence order over the corpus.
/// Throws empty_vocabulary when nothing survives stop-word removal.
Vocabulary build_vocabulary(const Corpus& corpus, int n, const StopWords& stopwords);

struct SparseVector {
  struct Entry {
    std::size_t index;
    double count;
  };
  std::size_t dimension = 0;
  /// Strictly increasing indices, positive counts.
  std::vector<Entry> entries;

  double total() const;
  Eigen::VectorXd to_dense() const;
};

/// Occurrence counts of in-vocabulary n-grams; unknown n-grams are dropped.
SparseVector count_vector(const Quote& quote, const Vocabulary& vocab, const StopWords& stopwords);

/// Dense count rows for every quote in the corpus.
Eigen::MatrixXd count_matrix(const Corpus& corpus, const Vocabulary& vocab, const StopWords& stopwords);

/// TF-IDF of each n-gram against the three category documents.
struct CategoryTermScores {
  std::array<std::map<std::string, double>, kLabelCount> scores;

  double score(Label category, const std::string& term) const;
  /// Highest-scoring terms, ties broken by term; zero scores are excluded.
  std::vector<std::pair<std::string, double>> top_terms(Label category, std::size_t count) const;
};

/// Each category's quotes are concatenated into one document; a term scores
/// raw_count * ln(3 / document_frequency). Throws schema for unlabelled quotes.
CategoryTermScores tfidf_by_category(const Corpus& corpus, int n, const StopWords& stopwords);

/// Deterministic encoder substitute: signed feature hashing of unigrams and
/// bigrams into `dimension` buckets, L2-normalised. Empty text maps to zero.
Eigen::VectorXd hash_encode(std::string_view text, Eigen::Index dimension, std::uint64_t seed = 0);

}  // namespace ideotrack
