#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "cce/grid.hpp"
#include "cce/random.hpp"

namespace cce::testing {

// Hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(SplitMix64::stream(seed, 0xC0FFEE)) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform01_open(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_.below(n)); }
  bool coin() { return rng_.below(2) == 1; }

  double normal() {
    const double u1 = rng_.uniform01_open(), u2 = rng_.uniform01_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Values with deliberate ties and negatives.
  std::vector<double> sample(std::size_t n) {
    std::vector<double> v(n);
    const bool integer = coin();
    for (auto& x : v) {
      x = integer ? std::round(uniform(-5.0, 20.0)) : uniform(-50.0, 200.0) * (coin() ? 1.0 : 0.01);
    }
    return v;
  }

  // Valid grid with irregular spacing (sometimes regular).
  ProportionGrid grid() {
    const std::size_t cuts = index(12);
    if (coin()) return ProportionGrid::uniform(cuts + 1);
    std::vector<double> pts{0.0, 1.0};
    for (std::size_t k = 0; k < cuts; ++k) pts.push_back(uniform(0.0, 1.0));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return ProportionGrid::validate(pts);
  }

 private:
  SplitMix64 rng_;
};

inline Eigen::MatrixXd with_intercept(const std::vector<double>& x) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = x[i];
  }
  return X;
}

inline Eigen::MatrixXd intercept_only(std::size_t n) {
  return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
}

}  // namespace cce::testing
