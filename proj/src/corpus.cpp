#include "ideotrack/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>

#include "ideotrack/error.hpp"

namespace ideotrack {

char to_char(Label label) {
  switch (label) {
    case Label::centrist: return 'c';
    case Label::extremist: return 'e';
    case Label::terrorist: return 't';
  }
  return '?';
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "c") return Label::centrist;
  if (text == "e") return Label::extremist;
  if (text == "t") return Label::terrorist;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos; }

}  // namespace

Corpus::Corpus(std::vector<Quote> quotes) : quotes_(std::move(quotes)) {
  for (std::size_t i = 0; i < quotes_.size(); ++i) {
    const auto& q = quotes_[i];
    if (q.id.empty()) throw Error(ErrorKind::schema, "quote " + std::to_string(i) + " has an empty id");
    if (blank(q.text)) throw Error(ErrorKind::schema, "quote '" + q.id + "' has empty text");
    if (!q.date.ok()) throw Error(ErrorKind::schema, "quote '" + q.id + "' has an invalid date");
    if (!by_id_.emplace(q.id, i).second) throw Error(ErrorKind::duplicate_id, "quote id '" + q.id + "'");
    by_author_[q.author].push_back(i);
  }
  for (auto& [author, indices] : by_author_) {
    std::sort(indices.begin(), indices.end(), [this](std::size_t a, std::size_t b) {
      const auto& qa = quotes_[a];
      const auto& qb = quotes_[b];
      if (qa.date != qb.date) return qa.date < qb.date;
      return qa.id < qb.id;
    });
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::authors() const {
  std::vector<std::string> out;
  out.reserve(by_author_.size());
  for (const auto& entry : by_author_) out.push_back(entry.first);
  return out;
}

std::span<const std::size_t> Corpus::author_quotes(const std::string& author) const {
  const auto it = by_author_.find(author);
  if (it == by_author_.end()) throw Error(ErrorKind::unknown_author, "'" + author + "'");
  return it->second;
}

std::array<std::size_t, kLabelCount> Corpus::label_counts() const {
  std::array<std::size_t, kLabelCount> counts{};
  for (const auto& q : quotes_) {
    if (q.label) ++counts[index_of(*q.label)];
  }
  return counts;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(quotes_.size());
  for (const auto& q : quotes_) out.push_back(q.id);
  return out;
}

// ---------------------------------------------------------------------------
// JSONL io

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& field, const std::string& what) {
  throw Error(ErrorKind::schema, where + ": field '" + field + "' " + what);
}

std::string required_string(const nlohmann::json& record, const std::string& where, const std::string& field) {
  if (!record.contains(field)) schema_error(where, field, "is missing");
  if (!record[field].is_string()) schema_error(where, field, "must be a string");
  return record[field].get<std::string>();
}

std::optional<Label> optional_label(const nlohmann::json& record, const std::string& where,
                                    const std::string& field) {
  if (!record.contains(field) || record[field].is_null()) return std::nullopt;
  if (!record[field].is_string()) schema_error(where, field, "must be \"c\", \"e\" or \"t\"");
  auto label = parse_label(record[field].get<std::string>());
  if (!label) schema_error(where, field, "must be \"c\", \"e\" or \"t\"");
  return label;
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::schema, where + ": " + e.what());
    }
    if (!record.is_object()) throw Error(ErrorKind::schema, where + ": record is not an object");
    fn(record, where);
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, const DateParseOptions& dates) {
  std::vector<Quote> quotes;
  std::unordered_map<std::string, std::string> first_seen;
  for_each_record(path, [&](const nlohmann::json& record, const std::string& where) {
    Quote q;
    q.id = required_string(record, where, "id");
    q.author = required_string(record, where, "author");
    q.text = required_string(record, where, "text");
    if (blank(q.text)) schema_error(where, "text", "is empty");
    const auto raw_date = required_string(record, where, "date");
    try {
      q.date = parse_date(raw_date, dates);
    } catch (const Error& e) {
      schema_error(where, "date", std::string("is not a date (") + e.what() + ")");
    }
    q.author_type = optional_label(record, where, "author_type");
    q.label = optional_label(record, where, "label");
    if (record.contains("source") && !record["source"].is_null()) {
      q.source = required_string(record, where, "source");
    }
    if (const auto [it, inserted] = first_seen.emplace(q.id, where); !inserted) {
      throw Error(ErrorKind::duplicate_id, where + ": id '" + q.id + "' already used at " + it->second);
    }
    quotes.push_back(std::move(q));
  });
  return Corpus(std::move(quotes));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  for (const auto& q : corpus) {
    nlohmann::ordered_json record;
    record["id"] = q.id;
    record["author"] = q.author;
    if (q.author_type) record["author_type"] = std::string(1, to_char(*q.author_type));
    record["text"] = q.text;
    record["date"] = to_iso(q.date);
    if (q.label) record["label"] = std::string(1, to_char(*q.label));
    if (q.source) record["source"] = *q.source;
    out << record.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ratings

Label merge_ratings(Label r1, Label r2, Label r3) {
  if (r1 == r2 || r1 == r3) return r1;
  if (r2 == r3) return r2;
  std::array<Label, 3> sorted{r1, r2, r3};
  std::sort(sorted.begin(), sorted.end());
  return sorted[1];
}

std::map<std::string, Rating> load_ratings(const std::filesystem::path& path) {
  std::map<std::string, Rating> out;
  for_each_record(path, [&](const nlohmann::json& record, const std::string& where) {
    const auto id = required_string(record, where, "id");
    std::array<Label, 3> r{};
    for (int i = 0; i < 3; ++i) {
      const auto field = "r" + std::to_string(i + 1);
      auto label = optional_label(record, where, field);
      if (!label) schema_error(where, field, "is missing");
      r[static_cast<std::size_t>(i)] = *label;
    }
    if (!out.emplace(id, Rating{r[0], r[1], r[2]}).second) {
      throw Error(ErrorKind::duplicate_id, where + ": rating id '" + id + "'");
    }
  });
  return out;
}

Corpus apply_ratings(const Corpus& corpus, const std::map<std::string, Rating>& ratings) {
  std::vector<Quote> quotes = corpus.quotes();
  for (const auto& [id, rating] : ratings) {
    const auto index = corpus.find(id);
    if (!index) throw Error(ErrorKind::schema, "rating for unknown quote '" + id + "'");
    quotes[*index].label = merge_ratings(rating.r1, rating.r2, rating.r3);
  }
  return Corpus(std::move(quotes));
}

// ---------------------------------------------------------------------------
// Synthetic corpora

void SyntheticConfig::validate() const {
  constexpr double tol = 1e-9;
  if (!statement_given_person.allFinite() || (statement_given_person.array() < 0).any()) {
    throw Error(ErrorKind::invalid_config, "p(s|k) entries must be finite and non-negative");
  }
  for (Eigen::Index k = 0; k < 3; ++k) {
    if (std::abs(statement_given_person.col(k).sum() - 1.0) > tol) {
      throw Error(ErrorKind::invalid_config, "p(s|k) column " + std::to_string(k) + " does not sum to 1");
    }
  }
  if (!person_prior.allFinite() || (person_prior.array() < 0).any() ||
      std::abs(person_prior.sum() - 1.0) > tol) {
    throw Error(ErrorKind::invalid_config, "p(k) must be non-negative and sum to 1");
  }
  const auto d = classes[0].mean.size();
  if (d < 1) throw Error(ErrorKind::invalid_config, "class means must be non-empty");
  for (std::size_t s = 0; s < kLabelCount; ++s) {
    const auto& g = classes[s];
    const auto name = std::string(1, to_char(label_at(s)));
    if (g.mean.size() != d || g.covariance.rows() != d || g.covariance.cols() != d) {
      throw Error(ErrorKind::invalid_config, "class " + name + " Gaussian has inconsistent dimensions");
    }
    if (!g.mean.allFinite() || !g.covariance.allFinite()) {
      throw Error(ErrorKind::invalid_config, "class " + name + " Gaussian is not finite");
    }
    if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() > tol) {
      throw Error(ErrorKind::invalid_config, "class " + name + " covariance is not symmetric");
    }
    if (g.covariance.llt().info() != Eigen::Success) {
      throw Error(ErrorKind::invalid_config, "class " + name + " covariance is not positive definite");
    }
  }
  if (days_between_quotes < 0) throw Error(ErrorKind::invalid_config, "days_between_quotes must be >= 0");
}

SyntheticConfig SyntheticConfig::reference(Eigen::Index dimension, double separation, double sigma) {
  if (dimension < 3) throw Error(ErrorKind::invalid_config, "synthetic dimension must be at least 3");
  SyntheticConfig cfg;
  cfg.statement_given_person << 0.993, 0.584, 0.220,
                                0.007, 0.409, 0.532,
                                0.000, 0.007, 0.248;
  cfg.person_prior << 0.813, 0.083, 0.104;
  // Scaled unit vectors e_0, e_1, e_2 are pairwise sqrt(2) * scale apart.
  const double scale = separation * sigma / std::sqrt(2.0);
  for (std::size_t s = 0; s < kLabelCount; ++s) {
    cfg.classes[s].mean = Eigen::VectorXd::Zero(dimension);
    cfg.classes[s].mean[static_cast<Eigen::Index>(s)] = scale;
    cfg.classes[s].covariance = sigma * sigma * Eigen::MatrixXd::Identity(dimension, dimension);
  }
  // 31/10/6 persons of 18 quotes give expected label counts near 681/130/28.
  cfg.persons_per_type = {31, 10, 6};
  cfg.quotes_per_person = 18;
  return cfg;
}

const std::array<std::vector<std::string>, kLabelCount>& synthetic_vocabulary() {
  static const std::array<std::vector<std::string>, kLabelCount> words = {{
      {"policy", "budget", "council", "election", "reform", "parliament", "economy", "schools",
       "hospitals", "minister", "taxes", "housing"},
      {"outrage", "enemies", "traitors", "betrayal", "corrupt", "resist", "awaken", "invaders",
       "uprising", "defiance", "elites", "purge"},
      {"attack", "strike", "bombing", "targets", "destroy", "martyrdom", "operation", "weapons",
       "cells", "blast", "assault", "raid"},
  }};
  return words;
}

const std::vector<std::string>& synthetic_shared_vocabulary() {
  static const std::vector<std::string> words = {"people", "today", "country", "future", "world", "time"};
  return words;
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  config.validate();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> length(6, 12);
  const auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  std::array<Eigen::MatrixXd, kLabelCount> factors;
  for (std::size_t s = 0; s < kLabelCount; ++s) factors[s] = config.classes[s].covariance.llt().matrixL();
  const auto d = config.classes[0].mean.size();

  static const std::array<std::string, 6> fillers = {"the", "of", "and", "to", "is", "on"};
  const auto& vocab = synthetic_vocabulary();
  const auto& shared = synthetic_shared_vocabulary();

  std::vector<Quote> quotes;
  EmbeddingMatrix embeddings;
  std::size_t serial = 0;
  int person_offset = 0;
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    const Eigen::Vector3d column = config.statement_given_person.col(static_cast<Eigen::Index>(k));
    for (std::size_t p = 0; p < config.persons_per_type[k]; ++p, ++person_offset) {
      char author[32];
      std::snprintf(author, sizeof author, "person_%c_%03zu", to_char(label_at(k)), p);
      for (std::size_t i = 0; i < config.quotes_per_person; ++i) {
        const double u = unit(rng);
        std::size_t s = 0;
        double cumulative = column[0];
        while (s + 1 < kLabelCount && u >= cumulative) cumulative += column[static_cast<Eigen::Index>(++s)];
        // Guard against rounding pushing u past a zero-probability tail.
        while (column[static_cast<Eigen::Index>(s)] == 0.0 && s > 0) --s;

        Eigen::VectorXd z(d);
        for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
        const Eigen::VectorXd vector = config.classes[s].mean + factors[s] * z;

        std::string text;
        const int n_tokens = length(rng);
        for (int t = 0; t < n_tokens; ++t) {
          const double r = unit(rng);
          const std::string* word;
          if (r < 0.7) {
            word = &vocab[s][pick(vocab[s].size())];
          } else if (r < 0.85) {
            word = &shared[pick(shared.size())];
          } else {
            word = &fillers[pick(fillers.size())];
          }
          if (!text.empty()) text += ' ';
          text += *word;
        }

        char id[32];
        std::snprintf(id, sizeof id, "q%06zu", serial++);
        Quote q;
        q.id = id;
        q.author = author;
        q.author_type = label_at(k);
        q.text = std::move(text);
        q.date = add_days(config.start_date,
                          person_offset + static_cast<int>(i) * config.days_between_quotes);
        q.label = label_at(s);
        q.source = "synthetic";
        embeddings.insert(q.id, vector);
        quotes.push_back(std::move(q));
      }
    }
  }
  return {Corpus(std::move(quotes)), std::move(embeddings)};
}

}  // namespace ideotrack
