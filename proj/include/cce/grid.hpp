#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cce {

// Ordered cut-points 0 = p_0 < p_1 < ... < p_J = 1 partitioning the unit
// interval of population proportions. Interval j (1-based in the literature,
// 0-based here) is (p_j, p_{j+1}] and carries weight p_{j+1} - p_j.
class ProportionGrid {
 public:
  // Throws Error{NotCoveringUnit | NotStrictlyIncreasing | TooFewPoints}.
  static ProportionGrid validate(std::span<const double> points);

  static ProportionGrid uniform(std::size_t intervals);
  static ProportionGrid deciles() { return uniform(10); }
  static ProportionGrid quartiles() { return uniform(4); }

  std::size_t intervals() const noexcept { return weights_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double lower(std::size_t j) const { return points_.at(j); }
  double upper(std::size_t j) const { return points_.at(j + 1); }
  double weight(std::size_t j) const { return weights_.at(j); }

  // Percent label like "0-10" or "12.5-25".
  std::string interval_label(std::size_t j) const;

  friend bool operator==(const ProportionGrid&, const ProportionGrid&) = default;

 private:
  explicit ProportionGrid(std::vector<double> points);

  std::vector<double> points_;
  std::vector<double> weights_;
};

inline ProportionGrid validate_grid(std::span<const double> raw_points) {
  return ProportionGrid::validate(raw_points);
}

}  // namespace cce
