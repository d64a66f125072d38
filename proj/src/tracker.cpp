#include "ideotrack/tracker.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ideotrack/error.hpp"
#include "ideotrack/metrics.hpp"

namespace ideotrack {

using Eigen::Index;

Gaussian2 fit_gaussian(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (points.cols() != 2) throw Error(ErrorKind::dimension_mismatch, "tracking space is two-dimensional");
  if (points.rows() < 2) throw Error(ErrorKind::group_too_small, "need at least two samples for a covariance");
  Gaussian2 g;
  g.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centred = points.rowwise() - g.mean.transpose();
  g.covariance = centred.transpose() * centred / static_cast<double>(points.rows() - 1);
  const double trace = g.covariance.trace();
  const double ridge = trace > 0 ? 1e-6 * trace / 2.0 : 1e-6;
  g.covariance += ridge * Eigen::Matrix2d::Identity();
  return g;
}

ClassStats fit_class_stats(const Corpus& corpus, const Eigen::Ref<const Eigen::MatrixXd>& projected) {
  if (projected.rows() != static_cast<Index>(corpus.size()) || projected.cols() != 2) {
    throw Error(ErrorKind::dimension_mismatch, "projected points must be one 2-D row per quote");
  }
  std::array<std::vector<Index>, kLabelCount> by_statement;
  std::array<std::vector<Index>, kLabelCount> by_person;
  Eigen::Matrix3d joint = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& q = corpus[i];
    if (!q.label) throw Error(ErrorKind::schema, "quote '" + q.id + "' has no label");
    if (!q.author_type) throw Error(ErrorKind::missing_author_type, "author '" + q.author + "' has no type");
    by_statement[index_of(*q.label)].push_back(static_cast<Index>(i));
    by_person[index_of(*q.author_type)].push_back(static_cast<Index>(i));
    joint(static_cast<Index>(index_of(*q.label)), static_cast<Index>(index_of(*q.author_type))) += 1;
  }

  ClassStats stats;
  std::array<double, kLabelCount> authors{};
  for (const auto& author : corpus.authors()) {
    const auto quotes = corpus.author_quotes(author);
    authors[index_of(*corpus[quotes.front()].author_type)] += 1;
  }
  const double total_authors = authors[0] + authors[1] + authors[2];
  if (total_authors == 0) throw Error(ErrorKind::group_too_small, "corpus has no authors");
  for (std::size_t k = 0; k < kLabelCount; ++k) stats.prior[static_cast<Index>(k)] = authors[k] / total_authors;
  for (Index k = 0; k < 3; ++k) {
    const double column = joint.col(k).sum();
    if (column > 0) stats.statement_given_person.col(k) = joint.col(k) / column;
  }

  const auto fit_group = [&](const std::vector<Index>& rows, const char* what, std::size_t k) {
    if (rows.size() < 2) {
      throw Error(ErrorKind::group_too_small, std::string(what) + " group '" + to_char(label_at(k)) + "' has " +
                                                  std::to_string(rows.size()) + " sample(s)");
    }
    return fit_gaussian(projected(rows, Eigen::all));
  };
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    // Statement groups only matter for components with a positive prior.
    if (by_statement[k].size() >= 2 || stats.active(k)) {
      stats.statement[k] = fit_group(by_statement[k], "statement", k);
      stats.statement_present[k] = true;
    }
    if (!by_person[k].empty()) {
      stats.person[k] = fit_group(by_person[k], "person", k);
      stats.person_present[k] = true;
    }
  }
  return stats;
}

Eigen::Vector3d component_weights(const Eigen::Vector2d& z, const ClassStats& stats) {
  std::array<double, kLabelCount> log_w;
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    log_w[k] = -std::numeric_limits<double>::infinity();
    if (stats.active(k) && stats.person_present[k]) {
      log_w[k] = log_density(stats.person[k], z) + std::log(stats.prior[static_cast<Index>(k)]);
    }
  }
  const auto w = normalise_log_weights<double>(log_w);
  return Eigen::Vector3d(w[0], w[1], w[2]);
}

Eigen::Matrix2d measurement_noise(const Eigen::Vector2d& z, const ClassStats& stats) {
  const Eigen::Vector3d w = component_weights(z, stats);
  std::vector<double> weights;
  std::vector<Gaussian2> components;
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    if (w[static_cast<Index>(k)] <= 0) continue;
    if (!stats.statement_present[k]) {
      throw Error(ErrorKind::group_too_small, std::string("no statement statistics for class ") + to_char(label_at(k)));
    }
    weights.push_back(w[static_cast<Index>(k)]);
    components.push_back(stats.statement[k]);
  }
  return moment_match<double, 2>(weights, components).covariance;
}

namespace {

nlohmann::json gaussian_json(const Gaussian2& g) {
  return {{"mean", {g.mean[0], g.mean[1]}},
          {"covariance", {g.covariance(0, 0), g.covariance(0, 1), g.covariance(1, 0), g.covariance(1, 1)}}};
}

Gaussian2 gaussian_from_json(const nlohmann::json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto cov = j.at("covariance").get<std::vector<double>>();
  if (mean.size() != 2 || cov.size() != 4) throw Error(ErrorKind::schema, "class stats must be two-dimensional");
  Gaussian2 g;
  g.mean << mean[0], mean[1];
  g.covariance << cov[0], cov[1], cov[2], cov[3];
  return g;
}

}  // namespace

nlohmann::json to_json(const ClassStats& stats) {
  nlohmann::ordered_json j;
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    const std::string key(1, to_char(label_at(k)));
    nlohmann::ordered_json entry;
    entry["prior"] = stats.prior[static_cast<Index>(k)];
    entry["statement"] = stats.statement_present[k] ? gaussian_json(stats.statement[k]) : nlohmann::json(nullptr);
    entry["person"] = stats.person_present[k] ? gaussian_json(stats.person[k]) : nlohmann::json(nullptr);
    std::vector<double> column(3);
    for (Index s = 0; s < 3; ++s) column[static_cast<std::size_t>(s)] = stats.statement_given_person(s, static_cast<Index>(k));
    entry["statement_given_person"] = column;
    j[key] = entry;
  }
  return j;
}

ClassStats class_stats_from_json(const nlohmann::json& j) {
  ClassStats stats;
  try {
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      const auto& entry = j.at(std::string(1, to_char(label_at(k))));
      stats.prior[static_cast<Index>(k)] = entry.at("prior").get<double>();
      if (!entry.at("statement").is_null()) {
        stats.statement[k] = gaussian_from_json(entry["statement"]);
        stats.statement_present[k] = true;
      }
      if (!entry.at("person").is_null()) {
        stats.person[k] = gaussian_from_json(entry["person"]);
        stats.person_present[k] = true;
      }
      const auto column = entry.at("statement_given_person").get<std::vector<double>>();
      if (column.size() != 3) throw Error(ErrorKind::schema, "statement_given_person needs three entries");
      for (Index s = 0; s < 3; ++s) stats.statement_given_person(s, static_cast<Index>(k)) = column[static_cast<std::size_t>(s)];
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("class stats: ") + e.what());
  }
  return stats;
}

void TrackerConfig::validate() const {
  if (!(process_variance >= 0) || !std::isfinite(process_variance)) {
    throw Error(ErrorKind::invalid_config, "process variance must be non-negative");
  }
  if (!(prior_position_variance > 0) || !(prior_velocity_variance > 0)) {
    throw Error(ErrorKind::invalid_config, "prior variances must be positive");
  }
  if (!(alert_threshold >= 0 && alert_threshold <= 1)) {
    throw Error(ErrorKind::invalid_config, "alert threshold must lie in [0, 1]");
  }
}

TrackState<double> TrackerConfig::initial_state() const {
  TrackState<double> s;
  s.mean.setZero();
  s.covariance = Eigen::Vector4d(prior_position_variance, prior_velocity_variance, prior_position_variance,
                                 prior_velocity_variance)
                     .asDiagonal();
  return s;
}

std::vector<TrackPoint> track_measurements(std::span<const Date> dates, const Eigen::Ref<const Eigen::MatrixXd>& z,
                                           const ClassStats& stats, const TrackerConfig& config,
                                           std::span<const std::string> ids) {
  config.validate();
  if (z.rows() != static_cast<Index>(dates.size()) || z.cols() != 2) {
    throw Error(ErrorKind::dimension_mismatch, "need one 2-D measurement per date");
  }
  const MotionModel<double> motion{config.process_variance};
  std::vector<TrackPoint> out;
  out.reserve(dates.size());
  TrackState<double> state = config.initial_state();
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i > 0) state = predict(state, years_between(dates[i - 1], dates[i]), motion);
    TrackPoint point;
    point.date = dates[i];
    if (!ids.empty()) point.quote_id = ids[i];
    point.z = z.row(static_cast<Index>(i)).transpose();
    point.r = measurement_noise(point.z, stats);
    state = update(state, point.z, point.r);
    point.state = state;
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<TrackPoint> track_author(const Corpus& corpus, const std::string& author,
                                     const Eigen::Ref<const Eigen::MatrixXd>& projected, const ClassStats& stats,
                                     const TrackerConfig& config) {
  if (projected.rows() != static_cast<Index>(corpus.size()) || projected.cols() != 2) {
    throw Error(ErrorKind::dimension_mismatch, "projected points must be one 2-D row per quote");
  }
  const auto quotes = corpus.author_quotes(author);
  std::vector<Date> dates;
  std::vector<std::string> ids;
  std::vector<Index> rows;
  for (const auto i : quotes) {
    dates.push_back(corpus[i].date);
    ids.push_back(corpus[i].id);
    rows.push_back(static_cast<Index>(i));
  }
  const Eigen::MatrixXd z = projected(rows, Eigen::all);
  return track_measurements(dates, z, stats, config, ids);
}

MulticlassModel fit_region_classifier(const Eigen::Ref<const Eigen::MatrixXd>& projected, std::span<const int> labels) {
  TrainOptions options;
  options.weights = WeightMode::balanced;
  options.upsample = false;
  return train_multiclass(projected, labels, 1.0, LinearKernel{}, options);
}

double terrorist_probability(const MulticlassModel& regions, const Eigen::Vector2d& point) {
  const int terrorist = static_cast<int>(index_of(Label::terrorist));
  const Eigen::VectorXd p = regions.probabilities(point);
  for (std::size_t c = 0; c < regions.classes.size(); ++c) {
    if (regions.classes[c] == terrorist) return p[static_cast<Index>(c)];
  }
  return 0.0;
}

std::vector<AlertPoint> alert(std::span<const TrackPoint> trajectory, const MulticlassModel& regions, double threshold) {
  std::vector<AlertPoint> out;
  out.reserve(trajectory.size());
  for (const auto& point : trajectory) {
    const Eigen::Vector2d position(point.state.mean[0], point.state.mean[2]);
    const double p = terrorist_probability(regions, position);
    out.push_back({point.date, p, p > threshold});
  }
  return out;
}

void write_trajectory_csv(std::span<const TrackPoint> trajectory, std::span<const AlertPoint> alerts, std::ostream& out) {
  if (alerts.size() != trajectory.size()) throw Error(ErrorKind::dimension_mismatch, "one alert per track point");
  out << "date,x1,v1,x2,v2";
  for (int r = 1; r <= 4; ++r) {
    for (int c = 1; c <= 4; ++c) out << ",p" << r << c;
  }
  out << ",z1,z2,r11,r12,r22,p_terrorist,alert\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& t = trajectory[i];
    out << to_iso(t.date);
    for (Index k = 0; k < 4; ++k) out << ',' << format_number(t.state.mean[k]);
    for (Index r = 0; r < 4; ++r) {
      for (Index c = 0; c < 4; ++c) out << ',' << format_number(t.state.covariance(r, c));
    }
    out << ',' << format_number(t.z[0]) << ',' << format_number(t.z[1]) << ',' << format_number(t.r(0, 0)) << ','
        << format_number(t.r(0, 1)) << ',' << format_number(t.r(1, 1)) << ',' << format_number(alerts[i].p_terrorist)
        << ',' << (alerts[i].fired ? 1 : 0) << '\n';
  }
}

}  // namespace ideotrack
