#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cce/estimators.hpp"
#include "cce/grid.hpp"
#include "cce/model.hpp"
#include "cce/quantreg.hpp"

namespace cce {

struct BootstrapSpec {
  std::size_t replications = 200;
  std::uint64_t seed = 20240101;
  double confidence_level = 0.95;
  // Point +- z * se instead of the percentile method.
  bool normal_intervals = false;
  // Execution only; reports do not depend on it.
  unsigned workers = 1;

  // Throws Error{InvalidBootstrapSpec}.
  void validate() const;
};

// Exact CE of the outcome values.
struct EmpiricalEstimator {};

// A gamma column reported as its own decomposition (e.g. "Age").
struct CoefficientColumn {
  std::size_t index = 0;
  std::string label;
};

// Regression CCE: fit the coefficient process on a midpoint mesh, average it
// per interval, then evaluate profiles and coefficient columns.
struct RegressionEstimator {
  std::size_t mesh_size = 1000;
  std::vector<CovariateProfile> profiles;
  std::vector<CoefficientColumn> coefficients;
  bool monotonize = false;  // rearrangement applies to profiles only
  ProcessOptions process{};
};

using EstimatorSelector = std::variant<EmpiricalEstimator, RegressionEstimator>;

// The decompositions an estimator produces on one data set, in a fixed order:
// profiles then coefficient columns for the regression estimator.
std::vector<Decomposition> estimate(const Sample& sample, const ProportionGrid& grid,
                                    const EstimatorSelector& estimator);

struct IntervalSummary {
  std::vector<double> point;
  std::vector<double> se;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
};

struct TargetInference {
  Decomposition point;
  IntervalSummary components;
  double mean = 0.0;
  double mean_se = 0.0;
  double mean_ci_lower = 0.0;
  double mean_ci_upper = 0.0;
  // Absent when the point estimate has no nonzero component.
  std::optional<IntervalSummary> contributions;
};

struct InferenceReport {
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  double confidence_level = 0.95;
  bool normal_intervals = false;
  std::size_t redrawn_replicates = 0;
  std::vector<TargetInference> targets;
};

// Nonparametric (pairs) bootstrap. Replicate r draws n row indices from
// SplitMix64::stream(seed, r, attempt); a failing replicate is redrawn with
// attempt + 1, at most 10 times, before TooManyDegenerateReplicates.
InferenceReport bootstrap(const Sample& sample, const ProportionGrid& grid, const EstimatorSelector& estimator,
                          const BootstrapSpec& spec);

// Bootstrap of the contribution shares only. Every target must have a
// nonzero component (AllZeroComponents otherwise).
std::vector<IntervalSummary> contribution_inference(const Sample& sample, const ProportionGrid& grid,
                                                    const EstimatorSelector& estimator, const BootstrapSpec& spec);

// Stable full-precision JSON rendering, used for reproducibility checks and
// the structured CLI output.
std::string to_json(const InferenceReport& report);

}  // namespace cce
