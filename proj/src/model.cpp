#include "cce/model.hpp"

#include <cmath>
#include <numeric>

#include "cce/error.hpp"

namespace cce {

namespace {

void require_finite(std::span<const double> xs, ErrorCode code, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw Error(code, std::string(what) + " entry " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::InvalidSample, "sample must hold at least one value");
  require_finite(values_, ErrorCode::InvalidSample, "sample value");
}

Sample::Sample(std::vector<double> values, Eigen::MatrixXd covariates) : Sample(std::move(values)) {
  if (static_cast<std::size_t>(covariates.rows()) != values_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate rows must match the number of values");
  }
  if (!covariates.allFinite()) throw Error(ErrorCode::InvalidSample, "covariates must be finite");
  covariates_ = std::move(covariates);
}

const Eigen::MatrixXd& Sample::covariates() const {
  if (!covariates_) throw Error(ErrorCode::DimensionMismatch, "sample has no covariates");
  return *covariates_;
}

double Sample::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

Sample Sample::take(std::span<const std::size_t> rows) const {
  std::vector<double> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = values_.at(rows[i]);
  if (!covariates_) return Sample(std::move(v));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), covariates_->cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = covariates_->row(static_cast<Eigen::Index>(rows[i]));
  }
  return Sample(std::move(v), std::move(x));
}

Decomposition::Decomposition(ProportionGrid grid, std::vector<double> components, std::string label)
    : grid_(std::move(grid)), components_(std::move(components)), label_(std::move(label)) {
  if (components_.size() != grid_.intervals()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(grid_.intervals()) + " components, got " +
                    std::to_string(components_.size()));
  }
  require_finite(components_, ErrorCode::InvalidSample, "component");
}

CovariateProfile::CovariateProfile(std::vector<double> values, std::string label)
    : values_(std::move(values)), label_(std::move(label)) {
  require_finite(values_, ErrorCode::InvalidSample, "profile");
}

double aggregate_mean(const Decomposition& d) {
  const auto& w = d.grid().weights();
  const auto& c = d.components();
  double m = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) m += w[j] * c[j];
  return m;
}

ContributionVector contributions(const Decomposition& d) {
  const auto& w = d.grid().weights();
  const auto& c = d.components();
  std::vector<double> mass(c.size());
  double total = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    mass[j] = w[j] * std::fabs(c[j]);
    total += mass[j];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::AllZeroComponents, "contributions are undefined when every component is zero");
  }
  for (double& m : mass) m = 100.0 * m / total;
  return {d.grid(), std::move(mass)};
}

Decomposition contrast(const Decomposition& a, const Decomposition& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorCode::GridMismatch, "contrast needs identical grids");
  std::vector<double> diff(a.components().size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = a.components()[j] - b.components()[j];
  return Decomposition(a.grid(), std::move(diff), a.label() + " to " + b.label());
}

}  // namespace cce
