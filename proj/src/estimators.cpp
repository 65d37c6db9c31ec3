#include "cce/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cce/error.hpp"

namespace cce {

namespace {

void check_interval(double a, double b) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) {
    std::ostringstream msg;
    msg << "interval [" << a << ", " << b << "] is not inside [0, 1] with a < b";
    throw Error(ErrorCode::InvalidInterval, msg.str());
  }
}

// Mesh levels per interval as index ranges [first, last).
std::vector<std::pair<std::size_t, std::size_t>> interval_slices(const std::vector<double>& levels,
                                                                  const ProportionGrid& grid) {
  std::vector<std::pair<std::size_t, std::size_t>> slices;
  std::size_t m = 0;
  // Levels at or below the first cut-point belong to no interval.
  while (m < levels.size() && levels[m] <= grid.lower(0)) ++m;
  for (std::size_t j = 0; j < grid.intervals(); ++j) {
    const std::size_t first = m;
    while (m < levels.size() && levels[m] <= grid.upper(j)) ++m;
    if (m == first) {
      throw Error(ErrorCode::MeshGridIncompatible,
                  "interval " + grid.interval_label(j) + " contains no mesh level");
    }
    slices.emplace_back(first, m);
  }
  return slices;
}

}  // namespace

double sorted_quantile_integral(std::span<const double> sorted, double a, double b) {
  check_interval(a, b);
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);
  // Block k (0-based) covers (k/n, (k+1)/n].
  const auto first = static_cast<std::size_t>(std::min(std::floor(a * nd), nd - 1.0));
  const auto last = static_cast<std::size_t>(std::min(std::ceil(b * nd), nd));
  double total = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const double lo = std::max(a, static_cast<double>(k) / nd);
    const double hi = std::min(b, static_cast<double>(k + 1) / nd);
    if (hi > lo) total += (hi - lo) * sorted[k];
  }
  return total / (b - a);
}

double empirical_quantile_integral(const Sample& sample, double a, double b) {
  if (sample.has_covariates()) {
    throw Error(ErrorCode::DimensionMismatch, "the empirical estimator takes a sample without covariates");
  }
  check_interval(a, b);
  std::vector<double> sorted = sample.values();
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile_integral(sorted, a, b);
}

Decomposition empirical_cce(const Sample& sample, const ProportionGrid& grid, std::string label) {
  std::vector<double> sorted = sample.values();
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> comps(grid.intervals());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    comps[j] = sorted_quantile_integral(sorted, grid.lower(j), grid.upper(j));
  }
  return Decomposition(grid, std::move(comps), std::move(label));
}

std::vector<double> midpoint_mesh(std::size_t mesh_size) {
  if (mesh_size == 0) throw Error(ErrorCode::MeshGridIncompatible, "mesh size must be positive");
  std::vector<double> u(mesh_size);
  const double m = static_cast<double>(mesh_size);
  for (std::size_t k = 0; k < mesh_size; ++k) u[k] = (static_cast<double>(k) + 0.5) / m;
  return u;
}

std::size_t default_mesh_size(const ProportionGrid& grid, std::size_t minimum) {
  constexpr std::size_t kMaxDenominator = 1'000'000;
  for (std::size_t d = 1; d <= kMaxDenominator; ++d) {
    const double dd = static_cast<double>(d);
    const bool aligned = std::all_of(grid.points().begin(), grid.points().end(), [&](double p) {
      return std::fabs(p * dd - std::round(p * dd)) < 1e-9 * dd;
    });
    if (aligned) return d * ((std::max<std::size_t>(minimum, 1) + d - 1) / d);
  }
  throw Error(ErrorCode::MeshGridIncompatible, "grid has no common denominator up to 10^6; pass a mesh size");
}

ComponentCoefficients component_coefficients(const CoefficientProcess& process, const ProportionGrid& grid,
                                             std::vector<std::string> covariate_names) {
  const auto p = static_cast<Eigen::Index>(process.dimension());
  if (covariate_names.empty()) {
    for (Eigen::Index k = 0; k < p; ++k) covariate_names.push_back("x" + std::to_string(k));
  }
  if (covariate_names.size() != process.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "one covariate name per coefficient is required");
  }
  const auto slices = interval_slices(process.levels(), grid);
  Eigen::MatrixXd gamma(static_cast<Eigen::Index>(grid.intervals()), p);
  for (std::size_t j = 0; j < slices.size(); ++j) {
    const auto [first, last] = slices[j];
    gamma.row(static_cast<Eigen::Index>(j)) =
        process.betas()
            .middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(last - first))
            .colwise()
            .mean();
  }
  return {grid, std::move(gamma), std::move(covariate_names)};
}

Decomposition cce_for_profile(const ComponentCoefficients& coeffs, const CovariateProfile& x) {
  if (static_cast<Eigen::Index>(x.size()) != coeffs.gamma.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "profile has " + std::to_string(x.size()) + " entries, expected " +
                                                  std::to_string(coeffs.gamma.cols()));
  }
  const Eigen::VectorXd c = coeffs.gamma * x.vector();
  return Decomposition(coeffs.grid, std::vector<double>(c.data(), c.data() + c.size()), x.label());
}

Decomposition rearranged_cce_for_profile(const CoefficientProcess& process, const ProportionGrid& grid,
                                         const CovariateProfile& x) {
  if (x.size() != process.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "profile length does not match the process dimension");
  }
  const Eigen::VectorXd pred = process.betas() * x.vector();
  std::vector<double> sorted(pred.data(), pred.data() + pred.size());
  std::sort(sorted.begin(), sorted.end());
  const auto slices = interval_slices(process.levels(), grid);
  std::vector<double> comps(grid.intervals());
  for (std::size_t j = 0; j < slices.size(); ++j) {
    const auto [first, last] = slices[j];
    double s = 0.0;
    for (std::size_t m = first; m < last; ++m) s += sorted[m];
    comps[j] = s / static_cast<double>(last - first);
  }
  return Decomposition(grid, std::move(comps), x.label());
}

}  // namespace cce
