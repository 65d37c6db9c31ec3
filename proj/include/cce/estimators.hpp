#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cce/grid.hpp"
#include "cce/model.hpp"
#include "cce/quantreg.hpp"

namespace cce {

// Per-interval covariate effects: row j holds the average of beta(u) over
// grid interval j, so CCE(x) = gamma * x.
struct ComponentCoefficients {
  ProportionGrid grid;
  Eigen::MatrixXd gamma;  // J x p
  std::vector<std::string> covariate_names;
};

// (1/(b-a)) * integral_a^b Q_n(u) du for the left-continuous empirical
// quantile function Q_n(u) = y_(k) on ((k-1)/n, k/n]. Exact.
double empirical_quantile_integral(const Sample& sample, double a, double b);

// Same, for values already sorted ascending.
double sorted_quantile_integral(std::span<const double> sorted, double a, double b);

Decomposition empirical_cce(const Sample& sample, const ProportionGrid& grid, std::string label = "Sample");

// Midpoint mesh u_k = (k - 0.5)/M, k = 1..M.
std::vector<double> midpoint_mesh(std::size_t mesh_size);

// Smallest multiple of the grid's common denominator that is >= minimum.
// Throws MeshGridIncompatible when the grid has no denominator <= 10^6.
std::size_t default_mesh_size(const ProportionGrid& grid, std::size_t minimum = 1000);

// gamma_j = plain average of beta over the process levels inside interval j.
ComponentCoefficients component_coefficients(const CoefficientProcess& process, const ProportionGrid& grid,
                                             std::vector<std::string> covariate_names = {});

Decomposition cce_for_profile(const ComponentCoefficients& coeffs, const CovariateProfile& x);

// Profile CCE after monotone rearrangement: the predictions x'beta(u) over
// the mesh are sorted before being averaged per interval.
Decomposition rearranged_cce_for_profile(const CoefficientProcess& process, const ProportionGrid& grid,
                                         const CovariateProfile& x);

}  // namespace cce
