#include "cce/grid.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cce/error.hpp"

namespace cce {

namespace {

std::string format_percent(double proportion) {
  // Shortest representation that survives the round trip at 1e-9 precision.
  const double pct = proportion * 100.0;
  for (int digits = 0; digits <= 9; ++digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, pct);
    if (std::fabs(std::strtod(buf, nullptr) - pct) < 1e-9) return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", pct);
  return buf;
}

}  // namespace

ProportionGrid::ProportionGrid(std::vector<double> points) : points_(std::move(points)) {
  weights_.reserve(points_.size() - 1);
  for (std::size_t j = 1; j < points_.size(); ++j) weights_.push_back(points_[j] - points_[j - 1]);
}

ProportionGrid ProportionGrid::validate(std::span<const double> points) {
  if (points.size() < 2) {
    throw Error(ErrorCode::TooFewPoints, "a grid needs at least the points 0 and 1");
  }
  if (points.front() != 0.0 || points.back() != 1.0) {
    throw Error(ErrorCode::NotCoveringUnit, "grid must start at exactly 0 and end at exactly 1");
  }
  for (std::size_t j = 1; j < points.size(); ++j) {
    if (!(points[j] > points[j - 1])) {
      std::ostringstream msg;
      msg << "point " << j << " (" << points[j] << ") does not exceed point " << j - 1 << " ("
          << points[j - 1] << ")";
      throw Error(ErrorCode::NotStrictlyIncreasing, msg.str());
    }
  }
  return ProportionGrid(std::vector<double>(points.begin(), points.end()));
}

ProportionGrid ProportionGrid::uniform(std::size_t intervals) {
  if (intervals == 0) throw Error(ErrorCode::TooFewPoints, "a grid needs at least one interval");
  std::vector<double> pts(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) {
    pts[j] = static_cast<double>(j) / static_cast<double>(intervals);
  }
  pts.back() = 1.0;
  return validate(pts);
}

std::string ProportionGrid::interval_label(std::size_t j) const {
  return format_percent(lower(j)) + "-" + format_percent(upper(j));
}

}  // namespace cce
