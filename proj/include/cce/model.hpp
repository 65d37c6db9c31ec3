#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cce/grid.hpp"

namespace cce {

// Observed outcomes, optionally with an n x p covariate matrix (one row per
// observation). Rank of the covariates is checked at fit time.
class Sample {
 public:
  explicit Sample(std::vector<double> values);
  Sample(std::vector<double> values, Eigen::MatrixXd covariates);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  bool has_covariates() const noexcept { return covariates_.has_value(); }
  const Eigen::MatrixXd& covariates() const;
  double mean() const;

  // Rows picked by index (with repetition), the bootstrap resampling step.
  Sample take(std::span<const std::size_t> rows) const;

 private:
  std::vector<double> values_;
  std::optional<Eigen::MatrixXd> covariates_;
};

// Per-interval component values c_j on a grid; the result of every CE/CCE
// estimator. Components are interval averages of a quantile function.
class Decomposition {
 public:
  Decomposition(ProportionGrid grid, std::vector<double> components, std::string label = {});

  const ProportionGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& components() const noexcept { return components_; }
  const std::string& label() const noexcept { return label_; }

 private:
  ProportionGrid grid_;
  std::vector<double> components_;
  std::string label_;
};

struct ContributionVector {
  ProportionGrid grid;
  std::vector<double> shares;  // percent, one per interval
};

class CovariateProfile {
 public:
  explicit CovariateProfile(std::vector<double> values, std::string label = {});

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::string& label() const noexcept { return label_; }
  Eigen::Map<const Eigen::VectorXd> vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

 private:
  std::vector<double> values_;
  std::string label_;
};

// Sum over intervals of weight * component.
double aggregate_mean(const Decomposition& d);

// Shares of sum_k w_k |c_k| in percent. Absolute values keep negative
// components (e.g. weight loss) as positive shares.
ContributionVector contributions(const Decomposition& d);

// Component-wise a - b, labelled "A to B".
Decomposition contrast(const Decomposition& a, const Decomposition& b);

}  // namespace cce
