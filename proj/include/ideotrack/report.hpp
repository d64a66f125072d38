#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ideotrack/svm.hpp"
#include "ideotrack/tracker.hpp"

namespace ideotrack {

/// Standalone SVG scatter; one <circle class="quote"> per row of `points`.
/// `classes` index into `names`, which also picks the marker colour.
void write_scatter_svg(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> classes,
                       const std::vector<std::string>& names, const std::string& title);

/// Track over the argmax regions of `regions` (a grid of <rect class="region">),
/// measurements as <circle class="quote"> and the posterior mean as a polyline.
void write_track_regions_svg(std::ostream& out, std::span<const TrackPoint> trajectory, const MulticlassModel& regions,
                             const std::string& title);

/// Dimension 2 against time: measurements, posterior mean and a two standard
/// deviation band.
void write_track_time_svg(std::ostream& out, std::span<const TrackPoint> trajectory, const std::string& title);

}  // namespace ideotrack
