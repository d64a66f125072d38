#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ideotrack/corpus.hpp"
#include "ideotrack/error.hpp"
#include "support.hpp"

using namespace ideotrack;
using test_support::TempDir;
using test_support::read_text;
using test_support::write_text;

namespace {

ErrorKind kind_of_failure(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("parse_date recognises the listed formats") {
  const Date expected = make_date(2018, 9, 27);
  CHECK(parse_date("27/09/2018") == expected);
  CHECK(parse_date("09/27/2018") == expected);
  CHECK(parse_date("27/09/18") == expected);
  CHECK(parse_date("September 27, 2018") == expected);
  CHECK(parse_date("27 Sep 2018") == expected);
  CHECK(parse_date("27 Sep 18") == expected);
  CHECK(parse_date("September 27", {false, 2018}) == expected);
  CHECK(parse_date("2018") == make_date(2018, 1, 1));
}

TEST_CASE("parse_date partial and ambiguous inputs") {
  CHECK(parse_date("March 2003") == make_date(2003, 3, 1));
  CHECK(parse_date("1990s") == make_date(1990, 1, 1));
  CHECK(parse_date("03/04/2018") == make_date(2018, 4, 3));
  CHECK(parse_date("03/04/2018", {true, std::nullopt}) == make_date(2018, 3, 4));
  CHECK(parse_date("Sept. 5, 2001") == make_date(2001, 9, 5));
  CHECK(parse_date("2001-09-11") == make_date(2001, 9, 11));
  // Several dates in one string: the earliest wins.
  CHECK(parse_date("Interview of 12 May 2004, published 2005") == make_date(2004, 5, 12));
  CHECK(parse_date("quoted 2010, said in 1998") == make_date(1998, 1, 1));
  // Two-digit years pivot at 69.
  CHECK(parse_date("1/2/68") == make_date(2068, 2, 1));
  CHECK(parse_date("1/2/69") == make_date(1969, 2, 1));
}

TEST_CASE("parse_date failures") {
  CHECK(kind_of_failure([] { parse_date(""); }) == ErrorKind::unparsable_date);
  CHECK(kind_of_failure([] { parse_date("no date here"); }) == ErrorKind::unparsable_date);
  CHECK(kind_of_failure([] { parse_date("31/02/2018"); }) == ErrorKind::unparsable_date);
  // "Month D" without a context year cannot be resolved.
  CHECK(kind_of_failure([] { parse_date("September 27"); }) == ErrorKind::unparsable_date);
}

TEST_CASE("parse_date is idempotent under ISO rendering") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> days(0, 60000);
  for (int i = 0; i < 500; ++i) {
    const Date d = add_days(make_date(1900, 1, 1), days(rng));
    CHECK(parse_date(to_iso(d)) == d);
  }
}

TEST_CASE("merge_ratings: majority, else median severity, over all 27 triples") {
  CHECK(merge_ratings(Label::centrist, Label::centrist, Label::terrorist) == Label::centrist);
  CHECK(merge_ratings(Label::terrorist, Label::terrorist, Label::extremist) == Label::terrorist);
  CHECK(merge_ratings(Label::centrist, Label::extremist, Label::terrorist) == Label::extremist);
  for (const auto a : kLabels) {
    for (const auto b : kLabels) {
      for (const auto c : kLabels) {
        // Oracle: count votes directly.
        std::array<int, 3> votes{};
        ++votes[index_of(a)];
        ++votes[index_of(b)];
        ++votes[index_of(c)];
        Label expected = Label::extremist;
        for (std::size_t k = 0; k < 3; ++k) {
          if (votes[k] >= 2) expected = label_at(k);
        }
        CHECK(merge_ratings(a, b, c) == expected);
        CHECK(merge_ratings(a, b, c) == merge_ratings(c, a, b));
        CHECK(merge_ratings(a, b, c) == merge_ratings(b, c, a));
        CHECK(merge_ratings(a, b, c) == merge_ratings(b, a, c));
      }
    }
  }
}

TEST_CASE("load_corpus basics") {
  TempDir dir("corpus");
  SUBCASE("empty file") {
    write_text(dir / "c.jsonl", "");
    CHECK(load_corpus(dir / "c.jsonl").empty());
  }
  SUBCASE("duplicate id") {
    write_text(dir / "c.jsonl",
               "{\"id\":\"a\",\"author\":\"x\",\"text\":\"hi\",\"date\":\"2001-01-01\"}\n"
               "{\"id\":\"a\",\"author\":\"y\",\"text\":\"yo\",\"date\":\"2002-01-01\"}\n");
    CHECK(kind_of_failure([&] { load_corpus(dir / "c.jsonl"); }) == ErrorKind::duplicate_id);
  }
  SUBCASE("schema error names line and field") {
    write_text(dir / "c.jsonl",
               "{\"id\":\"a\",\"author\":\"x\",\"text\":\"hi\",\"date\":\"2001-01-01\"}\n"
               "{\"id\":\"b\",\"author\":\"x\",\"date\":\"2001-01-01\"}\n");
    try {
      load_corpus(dir / "c.jsonl");
      FAIL("expected schema error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::schema);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
      CHECK(std::string(e.what()).find("text") != std::string::npos);
    }
  }
  SUBCASE("bad label and blank text") {
    write_text(dir / "c.jsonl", "{\"id\":\"a\",\"author\":\"x\",\"text\":\"hi\",\"date\":\"2001\",\"label\":\"q\"}\n");
    CHECK(kind_of_failure([&] { load_corpus(dir / "c.jsonl"); }) == ErrorKind::schema);
    write_text(dir / "c.jsonl", "{\"id\":\"a\",\"author\":\"x\",\"text\":\"  \",\"date\":\"2001\"}\n");
    CHECK(kind_of_failure([&] { load_corpus(dir / "c.jsonl"); }) == ErrorKind::schema);
  }
  SUBCASE("missing file") {
    CHECK(kind_of_failure([&] { load_corpus(dir / "missing.jsonl"); }) == ErrorKind::io);
  }
  SUBCASE("raw dates and per-author order with id tie-break") {
    write_text(dir / "c.jsonl",
               "{\"id\":\"q3\",\"author\":\"x\",\"text\":\"c\",\"date\":\"5 May 2003\",\"label\":\"t\"}\n"
               "{\"id\":\"q2\",\"author\":\"x\",\"text\":\"b\",\"date\":\"2003-05-05\"}\n"
               "{\"id\":\"q1\",\"author\":\"x\",\"text\":\"a\",\"date\":\"2001\",\"author_type\":\"e\"}\n");
    const Corpus corpus = load_corpus(dir / "c.jsonl");
    const auto order = corpus.author_quotes("x");
    REQUIRE(order.size() == 3);
    CHECK(corpus[order[0]].id == "q1");
    CHECK(corpus[order[1]].id == "q2");
    CHECK(corpus[order[2]].id == "q3");
    CHECK(corpus[order[0]].date == make_date(2001, 1, 1));
    CHECK(corpus.label_counts() == std::array<std::size_t, 3>{0, 0, 1});
    CHECK(kind_of_failure([&] { corpus.author_quotes("nobody"); }) == ErrorKind::unknown_author);
  }
}

TEST_CASE("label histogram of a 681/130/28 corpus") {
  TempDir dir("hist");
  std::string text;
  const std::array<std::pair<char, int>, 3> counts = {{{'c', 681}, {'e', 130}, {'t', 28}}};
  int serial = 0;
  for (const auto& [label, n] : counts) {
    for (int i = 0; i < n; ++i) {
      text += "{\"id\":\"q" + std::to_string(serial++) + "\",\"author\":\"a\",\"text\":\"x\",\"date\":\"2000-01-01\",\"label\":\"" +
              std::string(1, label) + "\"}\n";
    }
  }
  write_text(dir / "c.jsonl", text);
  const Corpus corpus = load_corpus(dir / "c.jsonl");
  CHECK(corpus.size() == 839);
  CHECK(corpus.label_counts() == std::array<std::size_t, 3>{681, 130, 28});
}

TEST_CASE("ratings merge into labels") {
  TempDir dir("ratings");
  write_text(dir / "c.jsonl",
             "{\"id\":\"a\",\"author\":\"x\",\"text\":\"hi\",\"date\":\"2001-01-01\"}\n"
             "{\"id\":\"b\",\"author\":\"x\",\"text\":\"yo\",\"date\":\"2001-01-02\"}\n");
  write_text(dir / "r.jsonl",
             "{\"id\":\"a\",\"r1\":\"c\",\"r2\":\"e\",\"r3\":\"t\"}\n"
             "{\"id\":\"b\",\"r1\":\"t\",\"r2\":\"t\",\"r3\":\"c\"}\n");
  const Corpus merged = apply_ratings(load_corpus(dir / "c.jsonl"), load_ratings(dir / "r.jsonl"));
  CHECK(merged[*merged.find("a")].label == Label::extremist);
  CHECK(merged[*merged.find("b")].label == Label::terrorist);
}

TEST_CASE("save then load is a fixed point") {
  TempDir dir("roundtrip");
  auto cfg = SyntheticConfig::reference(4, 3.0);
  cfg.persons_per_type = {2, 2, 2};
  cfg.quotes_per_person = 5;
  cfg.seed = 11;
  const auto data = generate_synthetic(cfg);
  save_corpus(data.corpus, dir / "a.jsonl");
  const Corpus loaded = load_corpus(dir / "a.jsonl");
  save_corpus(loaded, dir / "b.jsonl");
  CHECK(read_text(dir / "a.jsonl") == read_text(dir / "b.jsonl"));
  REQUIRE(loaded.size() == data.corpus.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == data.corpus[i].id);
    CHECK(loaded[i].date == data.corpus[i].date);
    CHECK(loaded[i].label == data.corpus[i].label);
    CHECK(loaded[i].author_type == data.corpus[i].author_type);
    CHECK(loaded[i].text == data.corpus[i].text);
  }
}

TEST_CASE("generate_synthetic contracts") {
  SUBCASE("type-c authors never emit terrorist quotes") {
    auto cfg = SyntheticConfig::reference(3, 3.0);
    cfg.persons_per_type = {20, 0, 0};
    cfg.quotes_per_person = 50;
    const auto data = generate_synthetic(cfg);
    CHECK(data.corpus.label_counts()[2] == 0);
  }
  SUBCASE("no persons gives an empty corpus") {
    auto cfg = SyntheticConfig::reference(3, 3.0);
    cfg.persons_per_type = {0, 0, 0};
    CHECK(generate_synthetic(cfg).corpus.empty());
  }
  SUBCASE("deterministic given the seed") {
    TempDir dir("det");
    auto cfg = SyntheticConfig::reference(3, 3.0);
    cfg.seed = 99;
    for (const auto* name : {"a", "b"}) {
      const auto data = generate_synthetic(cfg);
      save_corpus(data.corpus, dir / (std::string(name) + ".jsonl"));
      save_embeddings(data.embeddings, dir / (std::string(name) + ".emb"));
    }
    CHECK(read_text(dir / "a.jsonl") == read_text(dir / "b.jsonl"));
    CHECK(read_text(dir / "a.emb") == read_text(dir / "b.emb"));
  }
  SUBCASE("invalid configs are rejected") {
    auto cfg = SyntheticConfig::reference(3, 3.0);
    cfg.statement_given_person(0, 0) = 0.5;
    CHECK(kind_of_failure([&] { generate_synthetic(cfg); }) == ErrorKind::invalid_config);
    cfg = SyntheticConfig::reference(3, 3.0);
    cfg.person_prior << 0.5, 0.5, 0.5;
    CHECK(kind_of_failure([&] { cfg.validate(); }) == ErrorKind::invalid_config);
    cfg = SyntheticConfig::reference(3, 3.0);
    cfg.classes[1].covariance(0, 1) = 0.3;
    CHECK(kind_of_failure([&] { cfg.validate(); }) == ErrorKind::invalid_config);
  }
}

TEST_CASE("synthetic statement frequencies converge to p(s|k)") {
  auto cfg = SyntheticConfig::reference(3, 3.0);
  cfg.persons_per_type = {1, 1, 1};
  cfg.quotes_per_person = 10000;
  cfg.seed = 5;
  const auto data = generate_synthetic(cfg);
  Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
  for (const auto& q : data.corpus) counts(index_of(*q.label), index_of(*q.author_type)) += 1;
  for (Eigen::Index k = 0; k < 3; ++k) {
    for (Eigen::Index s = 0; s < 3; ++s) {
      const double p = cfg.statement_given_person(s, k);
      const double freq = counts(s, k) / 10000.0;
      const double se = std::sqrt(p * (1 - p) / 10000.0);
      if (p == 0) CHECK(freq == 0.0);
      else CHECK(std::abs(freq - p) <= 3 * se);
    }
  }
}
