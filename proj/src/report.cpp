#include "ideotrack/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ideotrack/error.hpp"

namespace ideotrack {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kMargin = 56;

const char* const kClassColours[] = {"#1f77b4", "#ff7f0e", "#d62728", "#2ca02c", "#9467bd"};
const char* const kRegionColours[] = {"#dce9f5", "#fde6cf", "#f6d5d5", "#d9f0d9", "#e7dff0"};

std::string fixed(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::string escape(const std::string& text) {
  std::string out;
  for (const char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Data-to-pixel mapping with a little padding around the data range.
struct Frame {
  double x0, x1, y0, y1;

  static Frame around(double x0, double x1, double y0, double y1) {
    const auto pad = [](double& lo, double& hi) {
      if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
      }
      const double p = 0.05 * (hi - lo);
      lo -= p;
      hi += p;
    };
    pad(x0, x1);
    pad(y0, y1);
    return {x0, x1, y0, y1};
  }

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

void open_svg(std::ostream& out, const std::string& title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostream& out, const Frame& f, const std::string& xlabel, const std::string& ylabel,
          const std::string& x_first, const std::string& x_last) {
  const double left = kMargin;
  const double right = kWidth - kMargin;
  const double top = kMargin;
  const double bottom = kHeight - kMargin;
  out << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom << "\"/>\n"
      << "</g>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(xlabel) << "</text>\n"
      << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">" << escape(ylabel) << "</text>\n"
      << "<text x=\"" << left << "\" y=\"" << bottom + 16 << "\" font-size=\"11\">" << escape(x_first) << "</text>\n"
      << "<text x=\"" << right << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\" font-size=\"11\">"
      << escape(x_last) << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << bottom << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(f.y0)
      << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(f.y1)
      << "</text>\n";
}

void legend(std::ostream& out, const std::vector<std::string>& names, const char* const* colours) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kMargin + 14.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kMargin + 6 << "\" y=\"" << y - 8 << "\" width=\"8\" height=\"8\" fill=\""
        << colours[i % 5] << "\"/>\n"
        << "<text x=\"" << kWidth - kMargin + 18 << "\" y=\"" << y << "\" font-size=\"11\">" << escape(names[i])
        << "</text>\n";
  }
}

}  // namespace

void write_scatter_svg(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> classes,
                       const std::vector<std::string>& names, const std::string& title) {
  if (points.cols() != 2 || static_cast<std::size_t>(points.rows()) != classes.size()) {
    throw Error(ErrorKind::dimension_mismatch, "scatter needs one class per 2-D point");
  }
  const Frame f = points.rows() > 0 ? Frame::around(points.col(0).minCoeff(), points.col(0).maxCoeff(),
                                                    points.col(1).minCoeff(), points.col(1).maxCoeff())
                                    : Frame::around(0, 0, 0, 0);
  open_svg(out, title);
  axes(out, f, "dimension 1", "dimension 2", fixed(f.x0), fixed(f.x1));
  legend(out, names, kClassColours);
  out << "<g class=\"points\" fill-opacity=\"0.7\">\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = classes[static_cast<std::size_t>(i)];
    out << "<circle class=\"quote\" cx=\"" << fixed(f.px(points(i, 0))) << "\" cy=\"" << fixed(f.py(points(i, 1)))
        << "\" r=\"3\" fill=\"" << kClassColours[static_cast<std::size_t>(std::max(c, 0)) % 5] << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

void write_track_regions_svg(std::ostream& out, std::span<const TrackPoint> trajectory, const MulticlassModel& regions,
                             const std::string& title) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& p : trajectory) {
    for (const Eigen::Vector2d& v : {p.z, Eigen::Vector2d(p.state.mean[0], p.state.mean[2])}) {
      x0 = std::min(x0, v[0]);
      x1 = std::max(x1, v[0]);
      y0 = std::min(y0, v[1]);
      y1 = std::max(y1, v[1]);
    }
  }
  if (trajectory.empty()) x0 = x1 = y0 = y1 = 0;
  // Show some of the surrounding regions as well.
  const double span = std::max({x1 - x0, y1 - y0, 2.0});
  const Frame f = Frame::around(x0 - 0.25 * span, x1 + 0.25 * span, y0 - 0.25 * span, y1 + 0.25 * span);

  open_svg(out, title);
  constexpr int cells = 48;
  const double cw = (kWidth - 2 * kMargin) / cells;
  const double ch = (kHeight - 2 * kMargin) / cells;
  out << "<g class=\"regions\" stroke=\"none\">\n";
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double cx = f.x0 + (i + 0.5) / cells * (f.x1 - f.x0);
      const double cy = f.y0 + (j + 0.5) / cells * (f.y1 - f.y0);
      const int label = regions.predict(Eigen::Vector2d(cx, cy));
      out << "<rect class=\"region\" x=\"" << fixed(kMargin + i * cw) << "\" y=\""
          << fixed(kHeight - kMargin - (j + 1) * ch) << "\" width=\"" << fixed(cw + 0.05) << "\" height=\""
          << fixed(ch + 0.05) << "\" fill=\"" << kRegionColours[static_cast<std::size_t>(std::max(label, 0)) % 5]
          << "\"/>\n";
    }
  }
  out << "</g>\n";
  axes(out, f, "dimension 1", "dimension 2", fixed(f.x0), fixed(f.x1));
  std::vector<std::string> names;
  for (const int c : regions.classes) names.push_back(c >= 0 && c < 3 ? std::string(1, to_char(label_at(static_cast<std::size_t>(c)))) : std::to_string(c));
  legend(out, names, kRegionColours);

  out << "<g class=\"measurements\" fill=\"#555555\">\n";
  for (const auto& p : trajectory) {
    out << "<circle class=\"quote\" cx=\"" << fixed(f.px(p.z[0])) << "\" cy=\"" << fixed(f.py(p.z[1]))
        << "\" r=\"2.5\"/>\n";
  }
  out << "</g>\n<polyline class=\"track\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& m = trajectory[i].state.mean;
    out << (i ? " " : "") << fixed(f.px(m[0])) << ',' << fixed(f.py(m[2]));
  }
  out << "\"/>\n</svg>\n";
}

void write_track_time_svg(std::ostream& out, std::span<const TrackPoint> trajectory, const std::string& title) {
  const auto time_of = [&](const TrackPoint& p) { return trajectory.empty() ? 0.0 : years_between(trajectory.front().date, p.date); };
  double t1 = 0;
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -y0;
  for (const auto& p : trajectory) {
    t1 = std::max(t1, time_of(p));
    const double sd = std::sqrt(std::max(0.0, p.state.covariance(2, 2)));
    y0 = std::min({y0, p.z[1], p.state.mean[2] - 2 * sd});
    y1 = std::max({y1, p.z[1], p.state.mean[2] + 2 * sd});
  }
  if (trajectory.empty()) y0 = y1 = 0;
  const Frame f = Frame::around(0, t1, y0, y1);

  open_svg(out, title);
  const std::string first = trajectory.empty() ? "" : to_iso(trajectory.front().date);
  const std::string last = trajectory.empty() ? "" : to_iso(trajectory.back().date);
  axes(out, f, "date", "dimension 2", first, last);

  out << "<polygon class=\"band\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& p = trajectory[i];
    const double sd = std::sqrt(std::max(0.0, p.state.covariance(2, 2)));
    out << (i ? " " : "") << fixed(f.px(time_of(p))) << ',' << fixed(f.py(p.state.mean[2] + 2 * sd));
  }
  for (std::size_t i = trajectory.size(); i-- > 0;) {
    const auto& p = trajectory[i];
    const double sd = std::sqrt(std::max(0.0, p.state.covariance(2, 2)));
    out << ' ' << fixed(f.px(time_of(p))) << ',' << fixed(f.py(p.state.mean[2] - 2 * sd));
  }
  out << "\"/>\n<polyline class=\"track\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& p = trajectory[i];
    out << (i ? " " : "") << fixed(f.px(time_of(p))) << ',' << fixed(f.py(p.state.mean[2]));
  }
  out << "\"/>\n<g class=\"measurements\" fill=\"#d62728\">\n";
  for (const auto& p : trajectory) {
    out << "<circle class=\"quote\" cx=\"" << fixed(f.px(time_of(p))) << "\" cy=\"" << fixed(f.py(p.z[1]))
        << "\" r=\"2.5\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace ideotrack
