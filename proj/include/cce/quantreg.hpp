#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cce/model.hpp"

namespace cce {

class QuantileLevel {
 public:
  // Throws Error{InvalidLevel} unless 0 < tau < 1.
  explicit QuantileLevel(double tau);
  double value() const noexcept { return tau_; }

 private:
  double tau_;
};

struct CoefficientVector {
  Eigen::VectorXd beta;
  double tau = 0.5;
  double achieved_loss = 0.0;
  // Observations interpolated exactly by the fit (one per coefficient).
  std::vector<std::size_t> basis;
};

// beta(u) tabulated on strictly increasing levels; row m of betas belongs to
// levels[m].
class CoefficientProcess {
 public:
  CoefficientProcess(std::vector<double> levels, Eigen::MatrixXd betas);

  std::size_t size() const noexcept { return levels_.size(); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(betas_.cols()); }
  const std::vector<double>& levels() const noexcept { return levels_; }
  const Eigen::MatrixXd& betas() const noexcept { return betas_; }

 private:
  std::vector<double> levels_;
  Eigen::MatrixXd betas_;
};

struct SolverOptions {
  // Cap on primal-dual interior-point iterations used for the warm start.
  int max_interior_iterations = 200;
  // Cap on simplex-style vertex exchanges; 0 means 10 n + 100.
  int max_vertex_steps = 0;
};

struct ProcessOptions {
  SolverOptions solver{};
  // Fit at clamp(level, 0.5/n, 1 - 0.5/n) while recording the mesh level.
  bool clamp_extreme_levels = true;
  // Levels are fitted independently, so the result does not depend on this.
  unsigned workers = 1;
};

// Sum of r (tau - 1{r < 0}).
double pinball_loss(std::span<const double> residuals, QuantileLevel tau);

// Exact minimizer of the pinball loss over linear predictors X beta.
// Throws Error{RankDeficient | DimensionMismatch | DidNotConverge}.
CoefficientVector fit_quantile_regression(const Eigen::MatrixXd& design, std::span<const double> response,
                                          QuantileLevel tau, const SolverOptions& options = {});

// One independent fit per level. Fit errors are rethrown naming the level.
CoefficientProcess fit_process(const Eigen::MatrixXd& design, std::span<const double> response,
                               std::span<const double> levels, const ProcessOptions& options = {});

// x' beta(tau) using the nearest mesh level. Throws LevelOutOfMeshRange.
double predict_quantile(const CoefficientProcess& process, const CovariateProfile& x, QuantileLevel tau);

}  // namespace cce
