#include "ideotrack/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ideotrack/error.hpp"

namespace ideotrack {

extern const char* const kDefaultStopwordsText;  // generated from data/stopwords_en.txt

namespace {

// Decodes one code point; malformed input yields U+FFFD and advances one byte.
char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  std::size_t extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead >> 5) == 0x6) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead >> 4) == 0xE) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead >> 3) == 0x1E) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (std::size_t i = 1; i <= extra; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b >> 6) != 0x2) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (in(cp, 0x80, 0xBF)) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7 || cp == 0xFFFD) return false;
  if (in(cp, 0x2000, 0x206F) || in(cp, 0x20A0, 0x20CF) || in(cp, 0x2100, 0x2BFF)) return false;
  if (in(cp, 0x3000, 0x303F) || in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFF00, 0xFF0F)) return false;
  if (in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65)) return false;
  if (in(cp, 0x1F000, 0x1FAFF)) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if ((in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) && cp % 2 == 0) return cp + 1;
  if ((in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) && cp % 2 == 1) return cp + 1;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (in(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (in(cp, 0x38E, 0x38F)) return cp + 0x3F;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  return cp;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ull ^ splitmix64(seed);
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return splitmix64(h);
}

StopWords parse_stopwords(std::istream& in) {
  StopWords out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    for (auto& token : tokenize(line.substr(first, last - first + 1))) out.insert(std::move(token));
  }
  return out;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = next_code_point(text, pos);
    if (is_word_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<NGram> extract_ngrams(const Tokens& tokens, int n, const StopWords& stopwords) {
  if (n != 1 && n != 2) throw Error(ErrorKind::invalid_argument, "n-gram order must be 1 or 2");
  Tokens kept;
  kept.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) kept.push_back(t);
  }
  std::vector<NGram> out;
  const auto order = static_cast<std::size_t>(n);
  if (kept.size() < order) return out;
  out.reserve(kept.size() - order + 1);
  for (std::size_t i = 0; i + order <= kept.size(); ++i) {
    out.emplace_back(kept.begin() + static_cast<std::ptrdiff_t>(i),
                     kept.begin() + static_cast<std::ptrdiff_t>(i + order));
  }
  return out;
}

std::string ngram_key(const NGram& ngram) {
  std::string key;
  for (const auto& token : ngram) {
    if (!key.empty()) key += ' ';
    key += token;
  }
  return key;
}

const StopWords& default_stopwords() {
  static const StopWords words = [] {
    std::istringstream in(kDefaultStopwordsText);
    return parse_stopwords(in);
  }();
  return words;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_stopwords(in);
}

std::size_t Vocabulary::add(const NGram& ngram) {
  const auto [it, inserted] = index_.emplace(ngram_key(ngram), terms_.size());
  if (inserted) terms_.push_back(ngram);
  return it->second;
}

std::optional<std::size_t> Vocabulary::index_of(const NGram& ngram) const {
  const auto it = index_.find(ngram_key(ngram));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const Corpus& corpus, int n, const StopWords& stopwords) {
  Vocabulary vocab(n);
  for (const auto& q : corpus) {
    for (const auto& g : extract_ngrams(tokenize(q.text), n, stopwords)) vocab.add(g);
  }
  if (vocab.size() == 0) {
    throw Error(ErrorKind::empty_vocabulary,
                "no " + std::to_string(n) + "-grams remain after stop-word removal");
  }
  return vocab;
}

double SparseVector::total() const {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.count;
  return sum;
}

Eigen::VectorXd SparseVector::to_dense() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension));
  for (const auto& e : entries) out[static_cast<Eigen::Index>(e.index)] = e.count;
  return out;
}

SparseVector count_vector(const Quote& quote, const Vocabulary& vocab, const StopWords& stopwords) {
  std::map<std::size_t, double> counts;
  for (const auto& g : extract_ngrams(tokenize(quote.text), vocab.n(), stopwords)) {
    if (const auto index = vocab.index_of(g)) counts[*index] += 1.0;
  }
  SparseVector out;
  out.dimension = vocab.size();
  out.entries.reserve(counts.size());
  for (const auto& [index, count] : counts) out.entries.push_back({index, count});
  return out;
}

Eigen::MatrixXd count_matrix(const Corpus& corpus, const Vocabulary& vocab, const StopWords& stopwords) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(corpus.size()),
                                              static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& e : count_vector(corpus[i], vocab, stopwords).entries) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index)) = e.count;
    }
  }
  return out;
}

double CategoryTermScores::score(Label category, const std::string& term) const {
  const auto& table = scores[index_of(category)];
  const auto it = table.find(term);
  return it == table.end() ? 0.0 : it->second;
}

std::vector<std::pair<std::string, double>> CategoryTermScores::top_terms(Label category,
                                                                         std::size_t count) const {
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [term, value] : scores[index_of(category)]) {
    if (value > 0.0) ranked.emplace_back(term, value);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > count) ranked.resize(count);
  return ranked;
}

CategoryTermScores tfidf_by_category(const Corpus& corpus, int n, const StopWords& stopwords) {
  std::array<std::map<std::string, double>, kLabelCount> tf;
  for (const auto& q : corpus) {
    if (!q.label) throw Error(ErrorKind::schema, "quote '" + q.id + "' has no label");
    auto& counts = tf[index_of(*q.label)];
    for (const auto& g : extract_ngrams(tokenize(q.text), n, stopwords)) counts[ngram_key(g)] += 1.0;
  }

  std::map<std::string, int> document_frequency;
  for (const auto& counts : tf) {
    for (const auto& entry : counts) ++document_frequency[entry.first];
  }

  CategoryTermScores out;
  const double documents = static_cast<double>(kLabelCount);
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    for (const auto& [term, count] : tf[c]) {
      out.scores[c][term] = count * std::log(documents / document_frequency[term]);
    }
  }
  return out;
}

Eigen::VectorXd hash_encode(std::string_view text, Eigen::Index dimension, std::uint64_t seed) {
  if (dimension < 2) throw Error(ErrorKind::invalid_argument, "hash dimension must be at least 2");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dimension);
  const auto tokens = tokenize(text);
  const auto bump = [&](const std::string& feature) {
    const std::uint64_t h = fnv1a(feature, seed);
    const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension));
    out[bucket] += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bump("1:" + tokens[i]);
    if (i + 1 < tokens.size()) bump("2:" + tokens[i] + " " + tokens[i + 1]);
  }
  const double norm = out.norm();
  // Features can cancel exactly; fall back to a deterministic unit vector.
  if (norm == 0.0) {
    if (!tokens.empty()) out[static_cast<Eigen::Index>(fnv1a(text, seed) % static_cast<std::uint64_t>(dimension))] = 1.0;
    return out;
  }
  return out / norm;
}

}  // namespace ideotrack
