#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "cce/error.hpp"
#include "cce/estimators.hpp"
#include "cce/oracle.hpp"
#include "cce/random.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cce;
using namespace cce::oracle;

namespace {

double Phi(double z) { return boost::math::cdf(boost::math::normal_distribution<double>{}, z); }
double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double Phi_inv(double u) {
  if (u <= 0.0) return -INFINITY;
  if (u >= 1.0) return INFINITY;
  return boost::math::quantile(boost::math::normal_distribution<double>{}, u);
}

// Partial-expectation closed forms.
double normal_component(double mu, double sigma, double a, double b) {
  return mu + sigma * (phi(Phi_inv(a)) - phi(Phi_inv(b))) / (b - a);
}
double lognormal_component(double mu, double sigma, double a, double b) {
  return std::exp(mu + 0.5 * sigma * sigma) * (Phi(Phi_inv(b) - sigma) - Phi(Phi_inv(a) - sigma)) / (b - a);
}

// Composite Simpson on Q over an interval kept away from the endpoints.
double simpson(const KnownDistribution& d, double a, double b, int steps) {
  const double h = (b - a) / steps;
  double s = true_quantile(d, a) + true_quantile(d, b);
  for (int k = 1; k < steps; ++k) s += (k % 2 ? 4.0 : 2.0) * true_quantile(d, a + k * h);
  return s * h / 3.0 / (b - a);
}

std::vector<KnownDistribution> zoo() {
  return {KnownDistribution(Uniform{-1.0, 3.0}),     KnownDistribution(Exponential{2.5}),
          KnownDistribution(Normal{1.0, 2.0}),       KnownDistribution(LogNormal{0.2, 0.7}),
          KnownDistribution(TwoPoint{-1.0, 4.0, 0.3})};
}

}  // namespace

TEST_CASE("true_quantile examples") {
  CHECK(true_quantile(KnownDistribution(Uniform{0, 1}), 0.3) == doctest::Approx(0.3));
  CHECK(true_quantile(KnownDistribution(Exponential{1}), 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(true_quantile(KnownDistribution(Normal{0, 1}), 0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(true_quantile(KnownDistribution(LogNormal{0, 1}), 0.5) == doctest::Approx(1.0));
  const KnownDistribution two(TwoPoint{0.0, 1.0, 0.4});
  CHECK(true_quantile(two, 0.4) == 0.0);
  CHECK(true_quantile(two, 0.4000001) == 1.0);
  CHECK_THROWS_WITH_AS(true_quantile(two, 0.0), doctest::Contains("InvalidLevel"), Error);
  CHECK_THROWS_AS(true_quantile(two, 1.0), Error);
}

TEST_CASE("true_component examples") {
  CHECK(true_component(KnownDistribution(Uniform{0, 1}), 0.9, 1.0) == doctest::Approx(0.95));
  CHECK(true_component(KnownDistribution(Exponential{1}), 0.9, 1.0) == doctest::Approx(1.0 + std::log(10.0)));
  CHECK(std::fabs(true_component(KnownDistribution(Normal{0, 1}), 0.0, 1.0)) < 1e-12);
  CHECK(true_component(KnownDistribution(TwoPoint{0.0, 1.0, 0.4}), 0.3, 0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(true_component(KnownDistribution(Uniform{0, 1}), 0.5, 0.5), Error);
}

TEST_CASE("exponential top decile agrees with a Monte Carlo top-decile mean") {
  const std::size_t n = 10'000'000;
  auto values = generate(KnownDistribution(Exponential{1.0}), n, 77).values();
  const std::size_t cut = n - n / 10;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(cut), values.end());
  const double mc = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(cut), values.end(), 0.0) /
                    static_cast<double>(n - cut);
  CHECK(std::fabs(mc - (1.0 + std::log(10.0))) < 5e-3);
}

TEST_CASE("quadrature matches closed-form partial expectations") {
  const double cuts[][2] = {{0.0, 0.1}, {0.1, 0.35}, {0.5, 0.9}, {0.9, 1.0}, {0.0, 1.0}, {0.999, 1.0}};
  for (const auto& c : cuts) {
    CHECK(true_component(KnownDistribution(Normal{1.0, 2.0}), c[0], c[1]) ==
          doctest::Approx(normal_component(1.0, 2.0, c[0], c[1])).epsilon(1e-10));
    CHECK(true_component(KnownDistribution(LogNormal{0.2, 0.7}), c[0], c[1]) ==
          doctest::Approx(lognormal_component(0.2, 0.7, c[0], c[1])).epsilon(1e-10));
  }
}

TEST_CASE("closed forms match Simpson integration of the quantile function") {
  for (const auto& d : zoo()) {
    if (std::holds_alternative<TwoPoint>(d.kind())) continue;
    CAPTURE(d.describe());
    CHECK(true_component(d, 0.2, 0.45) == doctest::Approx(simpson(d, 0.2, 0.45, 2000)).epsilon(1e-9));
  }
}

TEST_CASE("property: weighted components reproduce the mean; components increase") {
  testing::Gen gen(404);
  for (const auto& d : zoo()) {
    CAPTURE(d.describe());
    for (int trial = 0; trial < 40; ++trial) {
      const auto grid = gen.grid();
      double total = 0.0;
      double last = -INFINITY;
      for (std::size_t j = 0; j < grid.intervals(); ++j) {
        const double c = true_component(d, grid.lower(j), grid.upper(j));
        total += grid.weight(j) * c;
        CHECK(c >= last - 1e-12);
        last = c;
      }
      CHECK(std::fabs(total - d.mean()) <= 1e-8 * (1.0 + std::fabs(d.mean())));
    }
  }
}

TEST_CASE("generate is deterministic inverse-transform sampling") {
  const KnownDistribution d(Normal{0.0, 1.0});
  CHECK(generate(d, 100, 9).values() == generate(d, 100, 9).values());
  CHECK(generate(d, 100, 9).values() != generate(d, 100, 10).values());
  SplitMix64 rng = SplitMix64::stream(9, 0);
  const auto first = generate(d, 3, 9).values();
  for (double x : first) CHECK(x == true_quantile(d, rng.uniform01_open()));

  const auto uniform = generate(KnownDistribution(Uniform{0, 1}), 1'000'000, 3);
  CHECK(std::fabs(uniform.mean() - 0.5) < 0.002);
}

TEST_CASE("empirical components of generated samples approach the truth") {
  const auto grid = validate_grid(std::vector<double>{0, 0.3, 0.6, 0.8, 0.95, 1});
  for (const auto& d : zoo()) {
    CAPTURE(d.describe());
    const auto est = empirical_cce(generate(d, 400'000, 12), grid);
    for (std::size_t j = 0; j < grid.intervals(); ++j) {
      const double truth = true_component(d, grid.lower(j), grid.upper(j));
      CHECK(std::fabs(est.components()[j] - truth) < 0.03 * (1.0 + std::fabs(truth)));
    }
  }
}

TEST_CASE("invalid distributions are rejected") {
  CHECK_THROWS_WITH_AS(KnownDistribution(Uniform{1, 1}), doctest::Contains("InvalidDistribution"), Error);
  CHECK_THROWS_AS(KnownDistribution(Exponential{0}), Error);
  CHECK_THROWS_AS(KnownDistribution(Normal{0, -1}), Error);
  CHECK_THROWS_AS(KnownDistribution(LogNormal{0, 0}), Error);
  CHECK_THROWS_AS(KnownDistribution(TwoPoint{0, 1, 1.0}), Error);
  CHECK_THROWS_AS(KnownDistribution(TwoPoint{2, 1, 0.5}), Error);
}
