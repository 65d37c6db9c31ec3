#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cce/error.hpp"
#include "cce/inference.hpp"
#include "cce/oracle.hpp"
#include "cce/random.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cce;
using Eigen::MatrixXd;

namespace {

BootstrapSpec spec(std::size_t B, std::uint64_t seed = 11, unsigned workers = 1) {
  BootstrapSpec s;
  s.replications = B;
  s.seed = seed;
  s.workers = workers;
  return s;
}

// Sample with a binary covariate g and y = 1 + 2 g + noise.
Sample shifted_sample(std::size_t n, std::uint64_t seed) {
  testing::Gen gen(seed);
  std::vector<double> y(n);
  MatrixXd X(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gen.coin() ? 1.0 : 0.0;
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = g;
    y[i] = 1.0 + 2.0 * g + gen.normal();
  }
  return Sample(y, X);
}

RegressionEstimator shift_estimator(std::size_t mesh) {
  RegressionEstimator r;
  r.mesh_size = mesh;
  r.profiles = {CovariateProfile({1.0, 0.0}, "g=0"), CovariateProfile({1.0, 1.0}, "g=1")};
  r.coefficients = {{1, "g"}};
  return r;
}

}  // namespace

TEST_CASE("constant sample has zero spread") {
  const auto report = bootstrap(Sample({5, 5, 5, 5}), ProportionGrid::quartiles(), EmpiricalEstimator{}, spec(50));
  REQUIRE(report.targets.size() == 1);
  const auto& t = report.targets[0];
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(t.components.se[j] == 0.0);
    CHECK(t.components.ci_lower[j] == 5.0);
    CHECK(t.components.ci_upper[j] == 5.0);
    CHECK(t.contributions->se[j] == 0.0);
  }
  CHECK(t.mean_se == 0.0);
}

TEST_CASE("scaling the outcome by two doubles every standard error exactly") {
  const auto base = oracle::generate(oracle::KnownDistribution(oracle::LogNormal{0, 1}), 300, 4).values();
  std::vector<double> doubled(base);
  for (auto& v : doubled) v *= 2.0;
  const auto grid = ProportionGrid::deciles();
  const auto a = bootstrap(Sample(base), grid, EmpiricalEstimator{}, spec(100));
  const auto b = bootstrap(Sample(doubled), grid, EmpiricalEstimator{}, spec(100));
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(b.targets[0].components.se[j] == 2.0 * a.targets[0].components.se[j]);
    CHECK(b.targets[0].components.ci_upper[j] == 2.0 * a.targets[0].components.ci_upper[j]);
    // Shares are scale free.
    CHECK(b.targets[0].contributions->se[j] == doctest::Approx(a.targets[0].contributions->se[j]).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap se of the mean matches sd / sqrt(n)") {
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::Normal{3, 2}), 2000, 8);
  const auto& v = s.values();
  const double m = s.mean();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double analytic = std::sqrt(ss / static_cast<double>(v.size())) / std::sqrt(static_cast<double>(v.size()));
  const auto report = bootstrap(s, ProportionGrid::quartiles(), EmpiricalEstimator{}, spec(800));
  CHECK(report.targets[0].mean_se == doctest::Approx(analytic).epsilon(0.1));
  CHECK(report.targets[0].mean_ci_lower < m);
  CHECK(report.targets[0].mean_ci_upper > m);
}

TEST_CASE("exponential top decile is the least precise component") {
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::Exponential{1}), 10000, 21);
  const auto report = bootstrap(s, ProportionGrid::deciles(), EmpiricalEstimator{}, spec(500));
  const auto& se = report.targets[0].components.se;
  CHECK(std::max_element(se.begin(), se.end()) - se.begin() == 9);
}

TEST_CASE("normal intervals are symmetric around the point") {
  auto sp = spec(200);
  sp.normal_intervals = true;
  sp.confidence_level = 0.9;
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::Uniform{0, 1}), 500, 2);
  const auto t = bootstrap(s, ProportionGrid::quartiles(), EmpiricalEstimator{}, sp).targets[0];
  for (std::size_t j = 0; j < 4; ++j) {
    const double half = 1.6448536269514722 * t.components.se[j];
    CHECK(t.components.ci_upper[j] - t.components.point[j] == doctest::Approx(half).epsilon(1e-12));
    CHECK(t.components.point[j] - t.components.ci_lower[j] == doctest::Approx(half).epsilon(1e-12));
  }
}

TEST_CASE("two-interval contribution shares have identical spread") {
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::Normal{0, 1}), 1000, 6);
  const auto out =
      contribution_inference(s, validate_grid(std::vector<double>{0, 0.5, 1}), EmpiricalEstimator{}, spec(300));
  REQUIRE(out.size() == 1);
  CHECK(out[0].point[0] + out[0].point[1] == doctest::Approx(100.0));
  CHECK(std::fabs(out[0].point[0] - 50.0) < 6.0);
  // Shares sum to 100 in each replicate, so their deviations mirror.
  CHECK(out[0].se[0] == doctest::Approx(out[0].se[1]).epsilon(1e-9));
  CHECK(out[0].ci_lower[0] == doctest::Approx(100.0 - out[0].ci_upper[1]).epsilon(1e-9));
}

TEST_CASE("contribution inference requires a nonzero point estimate") {
  CHECK_THROWS_WITH_AS(contribution_inference(Sample({0, 0, 0}), ProportionGrid::quartiles(), EmpiricalEstimator{},
                                              spec(10)),
                       doctest::Contains("AllZeroComponents"), Error);
  // Plain bootstrap just omits the shares.
  const auto report = bootstrap(Sample({0, 0, 0}), ProportionGrid::quartiles(), EmpiricalEstimator{}, spec(10));
  CHECK_FALSE(report.targets[0].contributions.has_value());
}

TEST_CASE("reports do not depend on the worker count") {
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::LogNormal{0, 0.5}), 400, 13);
  const auto one = to_json(bootstrap(s, ProportionGrid::deciles(), EmpiricalEstimator{}, spec(64, 5, 1)));
  CHECK(one == to_json(bootstrap(s, ProportionGrid::deciles(), EmpiricalEstimator{}, spec(64, 5, 4))));
  CHECK(one == to_json(bootstrap(s, ProportionGrid::deciles(), EmpiricalEstimator{}, spec(64, 5, 8))));
  CHECK(one != to_json(bootstrap(s, ProportionGrid::deciles(), EmpiricalEstimator{}, spec(64, 6, 1))));

  const auto reg = shifted_sample(150, 3);
  const auto r1 = to_json(bootstrap(reg, ProportionGrid::quartiles(), shift_estimator(100), spec(12, 5, 1)));
  CHECK(r1 == to_json(bootstrap(reg, ProportionGrid::quartiles(), shift_estimator(100), spec(12, 5, 3))));
}

TEST_CASE("regression bootstrap recovers a location shift") {
  const auto s = shifted_sample(2000, 17);
  const auto report = bootstrap(s, ProportionGrid::quartiles(), shift_estimator(200), spec(40));
  REQUIRE(report.targets.size() == 3);
  CHECK(report.targets[0].point.label() == "g=0");
  CHECK(report.targets[2].point.label() == "g");
  const auto& g = report.targets[2].components;
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::fabs(g.point[j] - 2.0) < 4.0 * g.se[j] + 0.05);
    CHECK(g.se[j] > 0.0);
  }
  // Profile difference equals the coefficient column.
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(report.targets[1].components.point[j] - report.targets[0].components.point[j] ==
          doctest::Approx(g.point[j]).epsilon(1e-9));
  }
}

TEST_CASE("degenerate replicates are redrawn, then reported") {
  // Singleton indicators: a resample missing any of those rows is rank deficient.
  auto build = [](std::size_t indicators, std::size_t n) {
    testing::Gen gen(55);
    MatrixXd X = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(indicators + 1));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      X(static_cast<Eigen::Index>(i), 0) = 1.0;
      if (i < indicators) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
      y[i] = gen.normal();
    }
    return Sample(y, X);
  };
  RegressionEstimator one;
  one.mesh_size = 10;
  one.profiles = {CovariateProfile({1.0, 0.0})};
  const auto report = bootstrap(build(1, 30), ProportionGrid::quartiles(), one, spec(30));
  CHECK(report.redrawn_replicates > 0);
  CHECK(report.redrawn_replicates < 30);

  RegressionEstimator five;
  five.mesh_size = 10;
  five.profiles = {CovariateProfile(std::vector<double>(6, 0.0))};
  CHECK_THROWS_WITH_AS(bootstrap(build(5, 50), ProportionGrid::quartiles(), five, spec(20)),
                       doctest::Contains("TooManyDegenerateReplicates"), Error);
}

TEST_CASE("invalid bootstrap specifications") {
  CHECK_THROWS_WITH_AS(bootstrap(Sample({1, 2}), ProportionGrid::quartiles(), EmpiricalEstimator{}, spec(1)),
                       doctest::Contains("InvalidBootstrapSpec"), Error);
  auto bad = spec(10);
  bad.confidence_level = 1.0;
  CHECK_THROWS_AS(bootstrap(Sample({1, 2}), ProportionGrid::quartiles(), EmpiricalEstimator{}, bad), Error);
}
