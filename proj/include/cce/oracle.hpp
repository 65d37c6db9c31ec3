#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "cce/model.hpp"

namespace cce::oracle {

struct Uniform {
  double lower = 0.0;
  double upper = 1.0;
};
struct Exponential {
  double rate = 1.0;
};
struct Normal {
  double mu = 0.0;
  double sigma = 1.0;
};
struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;
};
// Two atoms: `low` with probability p_low, otherwise `high`.
struct TwoPoint {
  double low = 0.0;
  double high = 1.0;
  double p_low = 0.5;
};

// Distribution with a closed-form quantile function. Construction validates
// parameter domains and throws Error{InvalidDistribution}.
class KnownDistribution {
 public:
  using Kind = std::variant<Uniform, Exponential, Normal, LogNormal, TwoPoint>;

  explicit KnownDistribution(Kind kind);

  const Kind& kind() const noexcept { return kind_; }
  double mean() const;
  std::string describe() const;

 private:
  Kind kind_;
};

// Q(u) for u in (0, 1); throws InvalidLevel otherwise.
double true_quantile(const KnownDistribution& dist, double u);

// (1/(b-a)) * integral_a^b Q(u) du. Closed forms for uniform, exponential and
// two-point; adaptive Gauss-Kronrod in the normal-score variable z = Phi^-1(u)
// for normal and lognormal, which moves the endpoint singularities to +-inf.
double true_component(const KnownDistribution& dist, double a, double b);

// Inverse-transform draws Q(u_i); u_i are successive uniform01_open() outputs
// of SplitMix64::stream(seed, 0).
Sample generate(const KnownDistribution& dist, std::size_t n, std::uint64_t seed);

}  // namespace cce::oracle
