#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "ideotrack/error.hpp"
#include "ideotrack/tracker.hpp"

using namespace ideotrack;
using Eigen::Matrix2d;
using Eigen::Matrix4d;
using Eigen::Vector2d;
using Eigen::Vector4d;

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

Gaussian2 gaussian(Vector2d mean, Matrix2d cov) { return {mean, cov}; }

/// Every class shares one statement and one person distribution.
ClassStats uniform_stats(const Matrix2d& r) {
  ClassStats s;
  for (std::size_t k = 0; k < 3; ++k) {
    s.statement[k] = gaussian(Vector2d(0.5, -1), r);
    s.person[k] = gaussian(Vector2d(0, 0), Matrix2d::Identity());
    s.statement_present[k] = s.person_present[k] = true;
  }
  s.prior = Eigen::Vector3d(0.5, 0.3, 0.2);
  return s;
}

/// Classes on a line with the tightest statement spread for t.
ClassStats separated_stats() {
  ClassStats s;
  const std::array<double, 3> centre{0, 6, 12};
  const std::array<double, 3> spread{1.0, 0.6, 0.2};
  for (std::size_t k = 0; k < 3; ++k) {
    s.statement[k] = gaussian(Vector2d(centre[k], 0), spread[k] * Matrix2d::Identity());
    s.person[k] = gaussian(Vector2d(centre[k], 0), 0.5 * Matrix2d::Identity());
    s.statement_present[k] = s.person_present[k] = true;
  }
  s.prior = Eigen::Vector3d(0.8, 0.1, 0.1);
  return s;
}

bool symmetric_psd(const Matrix4d& p, double tol) {
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  const Eigen::SelfAdjointEigenSolver<Matrix4d> eig(p);
  return eig.eigenvalues().minCoeff() >= -tol * std::max(1.0, p.norm());
}

Quote quote(const std::string& id, const std::string& author, Label type, Label label, Date date) {
  Quote q;
  q.id = id;
  q.author = author;
  q.author_type = type;
  q.label = label;
  q.text = "text " + id;
  q.date = date;
  return q;
}

}  // namespace

TEST_CASE("motion model") {
  const MotionModel<double> m{0.1};
  CHECK(m.transition(0) == Matrix4d::Identity());
  CHECK(m.noise(0).isZero());
  const Matrix4d q = m.noise(1.0);
  CHECK(std::abs(q(0, 0) - 1.0 / 30) < 1e-12);
  CHECK(std::abs(q(0, 1) - 1.0 / 20) < 1e-12);
  CHECK(std::abs(q(1, 0) - 1.0 / 20) < 1e-12);
  CHECK(std::abs(q(1, 1) - 1.0 / 10) < 1e-12);
  CHECK(q.block<2, 2>(2, 2) == q.block<2, 2>(0, 0));
  CHECK(q.block<2, 2>(0, 2).isZero());
  for (const double dt : {0.01, 0.5, 3.0}) CHECK(symmetric_psd(m.noise(dt), 1e-15));
}

TEST_CASE("predict") {
  const MotionModel<double> m{0.1};
  TrackState<double> s;
  s.mean = Vector4d(0, 1, 0, -1);
  s.covariance = Vector4d(1, 2, 3, 4).asDiagonal();
  const auto same = predict(s, 0.0, m);
  CHECK(same.mean == s.mean);
  CHECK(same.covariance == s.covariance);
  const auto moved = predict(s, 2.0, m);
  CHECK(moved.mean == Vector4d(2, 1, -2, -1));
  CHECK(kind_of_failure([&] { predict(s, -0.1, m); }) == ErrorKind::negative_time_step);
}

TEST_CASE("update") {
  SUBCASE("uninformative measurement") {
    TrackState<double> s;
    s.mean = Vector4d(1, 2, 3, 4);
    s.covariance = Vector4d(16, 0.09, 16, 0.09).asDiagonal();
    const auto out = update(s, Vector2d(100, -100), 1e12 * Matrix2d::Identity());
    CHECK((out.mean - s.mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((out.covariance - s.covariance).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("measurement dominates a diffuse prior") {
    TrackState<double> s;
    s.covariance = Vector4d(1e6, 1, 1e6, 1).asDiagonal();
    const auto out = update(s, Vector2d(3, -7), 1e-6 * Matrix2d::Identity());
    CHECK(std::abs(out.mean[0] - 3) < 1e-3);
    CHECK(std::abs(out.mean[2] + 7) < 1e-3);
  }
  SUBCASE("scalar case") {
    TrackState<double> s;
    s.covariance = Matrix4d::Identity();
    const auto out = update(s, Vector2d(2, 2), Matrix2d::Identity());
    CHECK(out.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(out.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.covariance(0, 0) <= s.covariance(0, 0));
  }
  SUBCASE("singular innovation") {
    TrackState<double> s;
    s.covariance = Matrix4d::Zero();
    CHECK(kind_of_failure([&] { update(s, Vector2d(0, 0), Matrix2d::Zero()); }) == ErrorKind::singular_innovation);
  }
}

TEST_CASE("covariance stays symmetric PSD over random steps") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uniform(0, 1);
  std::normal_distribution<double> normal;
  const MotionModel<double> m{0.1};
  TrackerConfig cfg;
  auto state = cfg.initial_state();
  bool ok = true;
  for (int step = 0; step < 100000 && ok; ++step) {
    state = predict(state, 2 * uniform(rng), m);
    ok = ok && symmetric_psd(state.covariance, 1e-9);
    Matrix2d a;
    a << normal(rng), normal(rng), normal(rng), normal(rng);
    const Matrix2d r = a * a.transpose() + 0.01 * Matrix2d::Identity();
    state = update(state, Vector2d(5 * normal(rng), 5 * normal(rng)), r);
    ok = ok && symmetric_psd(state.covariance, 1e-9);
  }
  CHECK(ok);
}

TEST_CASE("filter equals the batch posterior without process noise") {
  const Matrix2d r = (Matrix2d() << 0.7, 0.2, 0.2, 0.4).finished();
  const auto stats = uniform_stats(r);
  TrackerConfig cfg;
  cfg.process_variance = 0;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<Date> dates;
  Date d = make_date(2001, 3, 1);
  const int n = 25;
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i) {
    d = add_days(d, 10 + static_cast<int>(rng() % 200));
    dates.push_back(d);
    z.row(i) << 1 + normal(rng), -2 + normal(rng);
  }
  const auto track = track_measurements(dates, z, stats, cfg);
  for (const auto& point : track) CHECK((point.r - r).cwiseAbs().maxCoeff() < 1e-12);

  // Information form over the first state.
  const MotionModel<double> m{0.0};
  const auto h = position_selector<double>();
  const Matrix4d p0 = cfg.initial_state().covariance;
  Matrix4d info = p0.inverse();
  Vector4d eta = Vector4d::Zero();
  const Matrix2d r_inv = r.inverse();
  for (int i = 0; i < n; ++i) {
    const Matrix4d f = m.transition(years_between(dates[0], dates[static_cast<std::size_t>(i)]));
    const Eigen::Matrix<double, 2, 4> a = h * f;
    info += a.transpose() * r_inv * a;
    eta += a.transpose() * r_inv * z.row(i).transpose();
  }
  const Matrix4d cov0 = info.inverse();
  const Vector4d mean0 = cov0 * eta;
  const Matrix4d f_last = m.transition(years_between(dates[0], dates.back()));
  const Vector4d mean = f_last * mean0;
  const Matrix4d cov = f_last * cov0 * f_last.transpose();
  CHECK((track.back().state.mean - mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((track.back().state.covariance - cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant measurements converge monotonically") {
  const auto stats = uniform_stats(Matrix2d::Identity());
  TrackerConfig cfg;
  cfg.process_variance = 0;
  std::vector<Date> dates;
  for (int i = 0; i < 30; ++i) dates.push_back(add_days(make_date(2000, 1, 1), 0));
  Eigen::MatrixXd z(30, 2);
  z.rowwise() = Eigen::RowVector2d(3, -1);
  const auto track = track_measurements(dates, z, stats, cfg);
  for (std::size_t i = 1; i < track.size(); ++i) {
    CHECK(std::abs(track[i].state.mean[0] - 3) <= std::abs(track[i - 1].state.mean[0] - 3) + 1e-12);
    CHECK(track[i].state.covariance(0, 0) <= track[i - 1].state.covariance(0, 0) + 1e-12);
  }
  // Same-day measurements: recursive least squares, mean = sum z / (n + 1/16).
  CHECK(track.back().state.mean[0] == doctest::Approx(3 * 30 / (30 + 1.0 / 16)).epsilon(1e-9));
}

TEST_CASE("mixture reduction") {
  SUBCASE("two symmetric components") {
    const Matrix2d sigma = (Matrix2d() << 2, 0.3, 0.3, 1).finished();
    const Vector2d mu(1.5, -0.5);
    const std::array<Gaussian2, 2> parts{gaussian(mu, sigma), gaussian(-mu, sigma)};
    const std::array<double, 2> w{0.5, 0.5};
    const auto g = moment_match<double, 2>(w, parts);
    CHECK((g.covariance - (sigma + mu * mu.transpose())).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(g.mean.isZero(1e-15));
    const std::array<double, 2> scaled{7.0, 7.0};
    CHECK((moment_match<double, 2>(scaled, parts).covariance - g.covariance).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("log weights") {
    const std::array<double, 3> lw{-1000.0, -1001.0, -std::numeric_limits<double>::infinity()};
    const auto w = normalise_log_weights<double>(lw);
    CHECK(w[0] == doctest::Approx(1 / (1 + std::exp(-1.0))));
    CHECK(w[2] == 0.0);
  }
  SUBCASE("degenerate prior") {
    auto stats = separated_stats();
    stats.prior = Eigen::Vector3d(1, 0, 0);
    for (const auto& z : {Vector2d(0, 0), Vector2d(12, 0), Vector2d(-300, 500)}) {
      CHECK((measurement_noise(z, stats) - stats.statement[0].covariance).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("terrorist statements are strong evidence") {
    const auto stats = separated_stats();
    const Vector2d at_t = stats.person[2].mean;
    const Vector2d at_c = stats.person[0].mean;
    CHECK(component_weights(at_t, stats)[2] > 0.99);
    CHECK((measurement_noise(at_t, stats) - stats.statement[2].covariance).cwiseAbs().maxCoeff() < 0.05);
    CHECK(measurement_noise(at_t, stats).trace() < measurement_noise(at_c, stats).trace());
    // Far from every cluster the weights are still finite.
    const Matrix2d far = measurement_noise(Vector2d(1e4, -1e4), stats);
    CHECK(far.allFinite());
    CHECK(Eigen::LLT<Matrix2d>(far).info() == Eigen::Success);
  }
  SUBCASE("class-independent statistics give a constant R") {
    const Matrix2d r = (Matrix2d() << 0.5, 0.1, 0.1, 0.3).finished();
    const auto stats = uniform_stats(r);
    for (const auto& z : {Vector2d(0, 0), Vector2d(4, 1), Vector2d(-9, 2)}) {
      CHECK((measurement_noise(z, stats) - r).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("fit_gaussian and fit_class_stats") {
  Eigen::MatrixXd same(2, 2);
  same << 1, 2, 1, 2;
  const auto g = fit_gaussian(same);
  CHECK(Eigen::LLT<Matrix2d>(g.covariance).info() == Eigen::Success);
  CHECK(kind_of_failure([&] { fit_gaussian(same.topRows(1)); }) == ErrorKind::group_too_small);

  const Date d = make_date(2010, 1, 1);
  SUBCASE("all authors centrist") {
    const Corpus corpus({quote("1", "a", Label::centrist, Label::centrist, d),
                         quote("2", "a", Label::centrist, Label::centrist, d),
                         quote("3", "b", Label::centrist, Label::extremist, d)});
    Eigen::MatrixXd z(3, 2);
    z << 0, 0, 1, 1, 5, 5;
    const auto stats = fit_class_stats(corpus, z);
    CHECK(stats.prior == Eigen::Vector3d(1, 0, 0));
    CHECK(!stats.statement_present[1]);
    CHECK(stats.statement_given_person.col(0).sum() == doctest::Approx(1.0));
    const auto back = class_stats_from_json(nlohmann::json::parse(to_json(stats).dump()));
    CHECK(back.prior == stats.prior);
    CHECK(back.statement[0].covariance == stats.statement[0].covariance);
    CHECK(back.statement_present == stats.statement_present);
  }
  SUBCASE("missing author type") {
    auto q = quote("1", "a", Label::centrist, Label::centrist, d);
    q.author_type.reset();
    const Corpus corpus({q, quote("2", "b", Label::centrist, Label::centrist, d)});
    CHECK(kind_of_failure([&] { fit_class_stats(corpus, Eigen::MatrixXd::Zero(2, 2)); }) ==
          ErrorKind::missing_author_type);
  }
  SUBCASE("active class with one statement") {
    const Corpus corpus({quote("1", "a", Label::centrist, Label::centrist, d),
                         quote("2", "a", Label::centrist, Label::centrist, d),
                         quote("3", "b", Label::terrorist, Label::terrorist, d),
                         quote("4", "b", Label::terrorist, Label::centrist, d)});
    CHECK(kind_of_failure([&] { fit_class_stats(corpus, Eigen::MatrixXd::Random(4, 2)); }) ==
          ErrorKind::group_too_small);
  }
  SUBCASE("recovers generative means") {
    auto config = SyntheticConfig::reference(3, 4.0);
    config.persons_per_type = {20, 10, 10};
    config.quotes_per_person = 20;
    config.seed = 8;
    const auto data = generate_synthetic(config);
    // Orthonormal map onto the plane holding the three class means.
    Eigen::Matrix<double, 3, 2> plane;
    plane.col(0) = Eigen::Vector3d(1, -1, 0) / std::sqrt(2.0);
    plane.col(1) = Eigen::Vector3d(1, 1, -2) / std::sqrt(6.0);
    const Eigen::MatrixXd z = data.embeddings.rows(data.corpus.ids()) * plane;
    const auto stats = fit_class_stats(data.corpus, z);
    const auto counts = data.corpus.label_counts();
    for (std::size_t k = 0; k < 3; ++k) {
      const double se = 1.0 / std::sqrt(static_cast<double>(counts[k]));
      const Vector2d expected = plane.transpose() * config.classes[k].mean;
      CHECK((stats.statement[k].mean - expected).cwiseAbs().maxCoeff() < 3 * se);
    }
    CHECK(stats.prior.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats.prior[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("tracking an author") {
  const Date d = make_date(2005, 6, 1);
  const Corpus corpus({quote("b", "x", Label::centrist, Label::centrist, add_days(d, 10)),
                       quote("a", "x", Label::centrist, Label::centrist, add_days(d, 10)),
                       quote("c", "x", Label::centrist, Label::centrist, d),
                       quote("d", "y", Label::centrist, Label::centrist, d)});
  Eigen::MatrixXd z(4, 2);
  z << 1, 1, 2, 2, 3, 3, 4, 4;
  const auto stats = uniform_stats(Matrix2d::Identity());
  const auto track = track_author(corpus, "x", z, stats, TrackerConfig{});
  REQUIRE(track.size() == 3);
  CHECK(track[0].quote_id == "c");
  CHECK(track[1].quote_id == "a");
  CHECK(track[2].quote_id == "b");
  CHECK(track[1].z == Vector2d(2, 2));
  CHECK(kind_of_failure([&] { track_author(corpus, "nobody", z, stats, TrackerConfig{}); }) ==
        ErrorKind::unknown_author);

  SUBCASE("one quote at the prior mean with a huge R") {
    const auto wide = uniform_stats(1e12 * Matrix2d::Identity());
    const Corpus one({quote("q", "solo", Label::centrist, Label::centrist, d)});
    const auto t = track_author(one, "solo", Eigen::MatrixXd::Zero(1, 2), wide, TrackerConfig{});
    REQUIRE(t.size() == 1);
    CHECK((t[0].state.covariance - TrackerConfig{}.initial_state().covariance).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(t[0].state.mean.isZero(1e-12));
  }
  SUBCASE("trajectory CSV") {
    std::vector<AlertPoint> alerts(track.size());
    std::ostringstream out;
    write_trajectory_csv(track, alerts, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "date,x1,v1,x2,v2,p11,p12,p13,p14,p21,p22,p23,p24,p31,p32,p33,p34,p41,p42,p43,p44,z1,z2,r11,r12,r22,"
          "p_terrorist,alert");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 27);
    }
    CHECK(rows == 3);
  }
  SUBCASE("config validation") {
    TrackerConfig bad;
    bad.prior_position_variance = 0;
    CHECK(kind_of_failure([&] { bad.validate(); }) == ErrorKind::invalid_config);
  }
}

TEST_CASE("region classifier and alerts") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  const std::array<Vector2d, 3> centres{Vector2d(0, 0), Vector2d(6, 0), Vector2d(3, 6)};
  Eigen::MatrixXd points(90, 2);
  std::vector<int> labels(90);
  for (int i = 0; i < 90; ++i) {
    const auto k = static_cast<std::size_t>(i % 3);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
    points.row(i) << centres[k][0] + normal(rng), centres[k][1] + normal(rng);
  }
  const auto regions = fit_region_classifier(points, labels);
  for (std::size_t k = 0; k < 3; ++k) CHECK(regions.predict(centres[k]) == static_cast<int>(k));
  CHECK(terrorist_probability(regions, centres[2]) > terrorist_probability(regions, centres[0]));
  for (int i = 0; i < 50; ++i) {
    const Vector2d probe(10 * normal(rng), 10 * normal(rng));
    const auto p = regions.probabilities(probe);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
    const int c = regions.predict(probe);
    CHECK((c >= 0 && c <= 2));
  }

  std::vector<TrackPoint> track(5);
  for (int i = 0; i < 5; ++i) {
    track[static_cast<std::size_t>(i)].date = add_days(make_date(2000, 1, 1), i);
    track[static_cast<std::size_t>(i)].state.mean = Vector4d(1.5 * i, 0, 1.5 * i, 0);
  }
  const auto never = alert(track, regions, 1.0);
  const auto always = alert(track, regions, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(!never[i].fired);
    CHECK(always[i].fired);
    CHECK(never[i].date == track[i].date);
  }
}
