#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>
#include <json.hpp>

#include "ideotrack/corpus.hpp"
#include "ideotrack/kalman.hpp"
#include "ideotrack/mixture.hpp"
#include "ideotrack/svm.hpp"

namespace ideotrack {

using Gaussian2 = Gaussian<double, 2>;

/// Class-conditional statistics in the 2-D tracking space.
///
/// `statement[k]` describes quote vectors labelled k and is the measurement
/// model of state k; `person[k]` describes quotes by authors of type k and
/// weights the components. A group with no samples is absent, which is only
/// allowed while its prior is zero.
struct ClassStats {
  std::array<Gaussian2, kLabelCount> statement;
  std::array<Gaussian2, kLabelCount> person;
  std::array<bool, kLabelCount> statement_present{};
  std::array<bool, kLabelCount> person_present{};
  Eigen::Vector3d prior = Eigen::Vector3d::Zero();
  /// Empirical p(statement | person type), columns indexed by person type.
  Eigen::Matrix3d statement_given_person = Eigen::Matrix3d::Zero();

  /// Whether component k takes part in the mixture.
  bool active(std::size_t k) const { return prior[static_cast<Eigen::Index>(k)] > 0; }
};

/// Sample mean and covariance plus a ridge of 1e-6 * trace / 2
/// (1e-6 when the trace is zero).
Gaussian2 fit_gaussian(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Rows of `projected` follow the corpus. Every quote needs a label and an
/// author type; a non-empty group needs at least two samples.
ClassStats fit_class_stats(const Corpus& corpus, const Eigen::Ref<const Eigen::MatrixXd>& projected);

/// Moment-matched covariance of the statement mixture, with weights from
/// the person-type densities at z times the prior.
Eigen::Matrix2d measurement_noise(const Eigen::Vector2d& z, const ClassStats& stats);
/// Normalised component weights used by measurement_noise.
Eigen::Vector3d component_weights(const Eigen::Vector2d& z, const ClassStats& stats);

nlohmann::json to_json(const ClassStats& stats);
ClassStats class_stats_from_json(const nlohmann::json& j);

struct TrackerConfig {
  double process_variance = 0.1;
  double prior_position_variance = 16.0;
  double prior_velocity_variance = 0.09;
  double alert_threshold = 0.5;

  void validate() const;
  TrackState<double> initial_state() const;
};

struct TrackPoint {
  Date date;
  std::string quote_id;
  TrackState<double> state;  // posterior after this quote
  Eigen::Vector2d z;
  Eigen::Matrix2d r;
};

/// Filters a measurement sequence. `dates` must be non-decreasing; the first
/// measurement is applied to the prior without a time step.
std::vector<TrackPoint> track_measurements(std::span<const Date> dates, const Eigen::Ref<const Eigen::MatrixXd>& z,
                                           const ClassStats& stats, const TrackerConfig& config,
                                           std::span<const std::string> ids = {});

/// Tracks one author's quotes in date order (ties by id). `projected` rows
/// follow the corpus.
std::vector<TrackPoint> track_author(const Corpus& corpus, const std::string& author,
                                     const Eigen::Ref<const Eigen::MatrixXd>& projected, const ClassStats& stats,
                                     const TrackerConfig& config);

/// Calibrated linear classifier over the 2-D space (balanced class weights,
/// C = 1), fitted on all labelled points. `labels` holds label indices.
MulticlassModel fit_region_classifier(const Eigen::Ref<const Eigen::MatrixXd>& projected, std::span<const int> labels);

/// Probability of the terrorist class; zero when the model lacks it.
double terrorist_probability(const MulticlassModel& regions, const Eigen::Vector2d& point);

struct AlertPoint {
  Date date;
  double p_terrorist = 0.0;
  bool fired = false;
};

/// p(terrorist) at each posterior position; fired when it exceeds `threshold`.
std::vector<AlertPoint> alert(std::span<const TrackPoint> trajectory, const MulticlassModel& regions, double threshold);

/// Columns date,x1,v1,x2,v2,p11..p44,z1,z2,r11,r12,r22,p_terrorist,alert.
void write_trajectory_csv(std::span<const TrackPoint> trajectory, std::span<const AlertPoint> alerts, std::ostream& out);

}  // namespace ideotrack
