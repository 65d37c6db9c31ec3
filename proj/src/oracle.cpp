#include "cce/oracle.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cce/error.hpp"
#include "cce/random.hpp"

namespace cce::oracle {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

const boost::math::normal_distribution<double> kStandardNormal{};

double normal_score(double u) {
  if (u <= 0.0) return -std::numeric_limits<double>::infinity();
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(kStandardNormal, u);
}

// integral over [za, zb] of exp(log_g(z)) phi(z) dz; the exponents are
// combined so lognormal tails do not overflow into inf * 0. Finite limits are
// mapped onto [0, 1]: on narrow slices the Kronrod error estimate otherwise
// stalls at an absolute floor and the recursion runs to full depth.
template <class F>
double normal_score_integral(F log_g, double za, double zb) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr double kLogRoot2Pi = 0.91893853320467274178;
  auto integrand = [&](double z) { return std::exp(log_g(z) - 0.5 * z * z - kLogRoot2Pi); };
  if (std::isinf(za) || std::isinf(zb)) return Rule::integrate(integrand, za, zb, 15, 1e-12);
  const double span = zb - za;
  return span * Rule::integrate([&](double t) { return integrand(za + t * span); }, 0.0, 1.0, 15, 1e-12);
}

// integral_a^b -ln(1-u) du.
double exponential_integral(double a, double b) {
  auto f = [](double v) { return v > 0.0 ? v - v * std::log(v) : 0.0; };
  return f(1.0 - a) - f(1.0 - b);
}

double overlap(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

}  // namespace

KnownDistribution::KnownDistribution(Kind kind) : kind_(kind) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidDistribution, m); };
  std::visit(overloaded{
                 [&](const Uniform& d) {
                   if (!(d.upper > d.lower)) fail("uniform needs upper > lower");
                 },
                 [&](const Exponential& d) {
                   if (!(d.rate > 0.0)) fail("exponential needs rate > 0");
                 },
                 [&](const Normal& d) {
                   if (!(d.sigma > 0.0)) fail("normal needs sigma > 0");
                 },
                 [&](const LogNormal& d) {
                   if (!(d.sigma > 0.0)) fail("lognormal needs sigma > 0");
                 },
                 [&](const TwoPoint& d) {
                   if (!(d.high > d.low)) fail("two-point needs high > low");
                   if (!(d.p_low > 0.0 && d.p_low < 1.0)) fail("two-point needs 0 < p_low < 1");
                 },
             },
             kind_);
}

double KnownDistribution::mean() const {
  return std::visit(overloaded{
                        [](const Uniform& d) { return 0.5 * (d.lower + d.upper); },
                        [](const Exponential& d) { return 1.0 / d.rate; },
                        [](const Normal& d) { return d.mu; },
                        [](const LogNormal& d) { return std::exp(d.mu + 0.5 * d.sigma * d.sigma); },
                        [](const TwoPoint& d) { return d.p_low * d.low + (1.0 - d.p_low) * d.high; },
                    },
                    kind_);
}

std::string KnownDistribution::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Uniform& d) { out << "uniform(" << d.lower << ", " << d.upper << ")"; },
                 [&](const Exponential& d) { out << "exponential(" << d.rate << ")"; },
                 [&](const Normal& d) { out << "normal(" << d.mu << ", " << d.sigma << ")"; },
                 [&](const LogNormal& d) { out << "lognormal(" << d.mu << ", " << d.sigma << ")"; },
                 [&](const TwoPoint& d) { out << "two-point(" << d.low << ", " << d.high << ", " << d.p_low << ")"; },
             },
             kind_);
  return out.str();
}

double true_quantile(const KnownDistribution& dist, double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::InvalidLevel, "quantile level must lie in (0, 1)");
  return std::visit(overloaded{
                        [&](const Uniform& d) { return d.lower + u * (d.upper - d.lower); },
                        [&](const Exponential& d) { return -std::log1p(-u) / d.rate; },
                        [&](const Normal& d) { return d.mu + d.sigma * normal_score(u); },
                        [&](const LogNormal& d) { return std::exp(d.mu + d.sigma * normal_score(u)); },
                        [&](const TwoPoint& d) { return u <= d.p_low ? d.low : d.high; },
                    },
                    dist.kind());
}

double true_component(const KnownDistribution& dist, double a, double b) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) throw Error(ErrorCode::InvalidInterval, "need 0 <= a < b <= 1");
  const double width = b - a;
  return std::visit(overloaded{
                        [&](const Uniform& d) { return d.lower + (d.upper - d.lower) * 0.5 * (a + b); },
                        [&](const Exponential& d) { return exponential_integral(a, b) / (width * d.rate); },
                        [&](const Normal& d) {
                          const double za = normal_score(a), zb = normal_score(b);
                          // z phi(z) changes sign at 0; integrate each side separately.
                          auto side = [](double lo, double hi) {
                            return normal_score_integral([](double z) { return std::log(std::fabs(z)); }, lo, hi);
                          };
                          double integral = 0.0;
                          if (za < 0.0) integral -= side(za, std::min(zb, 0.0));
                          if (zb > 0.0) integral += side(std::max(za, 0.0), zb);
                          return d.mu + d.sigma * integral / width;
                        },
                        [&](const LogNormal& d) {
                          const double za = normal_score(a), zb = normal_score(b);
                          return normal_score_integral([&](double z) { return d.mu + d.sigma * z; }, za, zb) /
                                 width;
                        },
                        [&](const TwoPoint& d) {
                          return (overlap(a, b, 0.0, d.p_low) * d.low + overlap(a, b, d.p_low, 1.0) * d.high) / width;
                        },
                    },
                    dist.kind());
}

Sample generate(const KnownDistribution& dist, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidSample, "n must be positive");
  SplitMix64 gen = SplitMix64::stream(seed, 0);
  std::vector<double> values(n);
  for (double& v : values) v = true_quantile(dist, gen.uniform01_open());
  return Sample(std::move(values));
}

}  // namespace cce::oracle
