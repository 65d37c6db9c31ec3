#include "cce/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "cce/error.hpp"
#include "cce/random.hpp"

namespace cce {

namespace {

constexpr int kMaxRedraws = 10;

// Flattened replicate layout per target: J components, the mean, then J
// shares when contributions are tracked for that target.
struct Layout {
  std::size_t intervals = 0;
  std::vector<char> with_shares;
  std::vector<std::size_t> offset;
  std::size_t width = 0;
};

Layout make_layout(std::size_t intervals, const std::vector<char>& with_shares) {
  Layout l{intervals, with_shares, {}, 0};
  for (char s : with_shares) {
    l.offset.push_back(l.width);
    l.width += intervals + 1 + (s ? intervals : 0);
  }
  return l;
}

std::vector<double> flatten(const std::vector<Decomposition>& ds, const Layout& layout) {
  std::vector<double> out(layout.width);
  for (std::size_t t = 0; t < ds.size(); ++t) {
    auto* row = out.data() + layout.offset[t];
    const auto& c = ds[t].components();
    std::copy(c.begin(), c.end(), row);
    row[layout.intervals] = aggregate_mean(ds[t]);
    if (layout.with_shares[t]) {
      const auto shares = contributions(ds[t]).shares;
      std::copy(shares.begin(), shares.end(), row + layout.intervals + 1);
    }
  }
  return out;
}

double percentile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Moments {
  double se, lower, upper;
};

Moments summarize(const std::vector<std::vector<double>>& reps, std::size_t column, double point,
                  const BootstrapSpec& spec) {
  std::vector<double> xs(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) xs[r] = reps[r][column];
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  const double alpha = 1.0 - spec.confidence_level;
  if (spec.normal_intervals) {
    const double z = boost::math::quantile(boost::math::normal_distribution<double>{}, 1.0 - alpha / 2.0);
    return {se, point - z * se, point + z * se};
  }
  const double lower = percentile(xs, alpha / 2.0);
  const double upper = percentile(xs, 1.0 - alpha / 2.0);
  return {se, lower, upper};
}

InferenceReport run_bootstrap(const Sample& sample, const ProportionGrid& grid, const EstimatorSelector& estimator,
                              const BootstrapSpec& spec, bool require_shares) {
  spec.validate();
  const std::vector<Decomposition> point = estimate(sample, grid, estimator);

  std::vector<char> with_shares(point.size(), 0);
  for (std::size_t t = 0; t < point.size(); ++t) {
    const auto& c = point[t].components();
    const bool nonzero = std::any_of(c.begin(), c.end(), [](double v) { return v != 0.0; });
    if (!nonzero && require_shares) {
      throw Error(ErrorCode::AllZeroComponents, "target '" + point[t].label() + "' has no nonzero component");
    }
    with_shares[t] = nonzero ? 1 : 0;
  }
  const Layout layout = make_layout(grid.intervals(), with_shares);
  const std::vector<double> point_flat = flatten(point, layout);

  const std::size_t n = sample.size();
  const std::size_t B = spec.replications;
  std::vector<std::vector<double>> reps(B);
  std::vector<int> redraws(B, 0);
  std::vector<std::exception_ptr> failures(B);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::vector<std::size_t> rows(n);
    for (std::size_t r = next++; r < B; r = next++) {
      for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        SplitMix64 gen = SplitMix64::stream(spec.seed, r, static_cast<std::uint64_t>(attempt));
        for (auto& i : rows) i = static_cast<std::size_t>(gen.below(n));
        try {
          reps[r] = flatten(estimate(sample.take(rows), grid, estimator), layout);
          redraws[r] = attempt;
          break;
        } catch (const Error&) {
          if (attempt == kMaxRedraws) {
            failures[r] = std::make_exception_ptr(
                Error(ErrorCode::TooManyDegenerateReplicates, "replicate " + std::to_string(r) + " failed " +
                                                                  std::to_string(kMaxRedraws + 1) +
                                                                  " consecutive draws"));
          }
        } catch (...) {
          failures[r] = std::current_exception();
          break;
        }
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(B)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  InferenceReport report;
  report.replications = B;
  report.seed = spec.seed;
  report.confidence_level = spec.confidence_level;
  report.normal_intervals = spec.normal_intervals;
  for (int d : redraws) report.redrawn_replicates += d > 0 ? 1 : 0;

  const std::size_t J = grid.intervals();
  for (std::size_t t = 0; t < point.size(); ++t) {
    const std::size_t base = layout.offset[t];
    TargetInference ti{point[t], {}, 0.0, 0.0, 0.0, 0.0, std::nullopt};
    auto fill = [&](IntervalSummary& s, std::size_t first) {
      for (std::size_t j = 0; j < J; ++j) {
        const double p = point_flat[first + j];
        const Moments m = summarize(reps, first + j, p, spec);
        s.point.push_back(p);
        s.se.push_back(m.se);
        s.ci_lower.push_back(m.lower);
        s.ci_upper.push_back(m.upper);
      }
    };
    fill(ti.components, base);
    ti.mean = point_flat[base + J];
    const Moments mm = summarize(reps, base + J, ti.mean, spec);
    ti.mean_se = mm.se;
    ti.mean_ci_lower = mm.lower;
    ti.mean_ci_upper = mm.upper;
    if (with_shares[t]) {
      IntervalSummary shares;
      fill(shares, base + J + 1);
      ti.contributions = std::move(shares);
    }
    report.targets.push_back(std::move(ti));
  }
  return report;
}

}  // namespace

void BootstrapSpec::validate() const {
  if (replications < 2) throw Error(ErrorCode::InvalidBootstrapSpec, "at least 2 replications are required");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw Error(ErrorCode::InvalidBootstrapSpec, "confidence level must lie in (0, 1)");
  }
}

std::vector<Decomposition> estimate(const Sample& sample, const ProportionGrid& grid,
                                    const EstimatorSelector& estimator) {
  if (std::holds_alternative<EmpiricalEstimator>(estimator)) {
    if (sample.has_covariates()) return {empirical_cce(Sample(sample.values()), grid)};
    return {empirical_cce(sample, grid)};
  }
  const auto& reg = std::get<RegressionEstimator>(estimator);
  const auto& X = sample.covariates();
  const std::vector<double> mesh = midpoint_mesh(reg.mesh_size);
  const CoefficientProcess process = fit_process(X, sample.values(), mesh, reg.process);
  const ComponentCoefficients coeffs = component_coefficients(process, grid);

  std::vector<Decomposition> out;
  for (const auto& profile : reg.profiles) {
    out.push_back(reg.monotonize ? rearranged_cce_for_profile(process, grid, profile)
                                 : cce_for_profile(coeffs, profile));
  }
  for (const auto& col : reg.coefficients) {
    if (static_cast<Eigen::Index>(col.index) >= coeffs.gamma.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "coefficient column " + std::to_string(col.index) + " out of range");
    }
    const Eigen::VectorXd g = coeffs.gamma.col(static_cast<Eigen::Index>(col.index));
    out.emplace_back(grid, std::vector<double>(g.data(), g.data() + g.size()), col.label);
  }
  return out;
}

InferenceReport bootstrap(const Sample& sample, const ProportionGrid& grid, const EstimatorSelector& estimator,
                          const BootstrapSpec& spec) {
  return run_bootstrap(sample, grid, estimator, spec, false);
}

std::vector<IntervalSummary> contribution_inference(const Sample& sample, const ProportionGrid& grid,
                                                    const EstimatorSelector& estimator, const BootstrapSpec& spec) {
  const InferenceReport report = run_bootstrap(sample, grid, estimator, spec, true);
  std::vector<IntervalSummary> out;
  for (const auto& t : report.targets) out.push_back(*t.contributions);
  return out;
}

std::string to_json(const InferenceReport& report) {
  using nlohmann::ordered_json;
  auto summary = [](const IntervalSummary& s) {
    return ordered_json{{"point", s.point}, {"se", s.se}, {"ci_lower", s.ci_lower}, {"ci_upper", s.ci_upper}};
  };
  ordered_json targets = ordered_json::array();
  for (const auto& t : report.targets) {
    ordered_json jt{{"label", t.point.label()},
                    {"components", summary(t.components)},
                    {"mean", {{"point", t.mean}, {"se", t.mean_se}, {"ci_lower", t.mean_ci_lower}, {"ci_upper", t.mean_ci_upper}}}};
    jt["contributions"] = t.contributions ? summary(*t.contributions) : ordered_json(nullptr);
    targets.push_back(std::move(jt));
  }
  ordered_json root{{"method", "bootstrap"},
                    {"replications", report.replications},
                    {"seed", report.seed},
                    {"confidence_level", report.confidence_level},
                    {"interval", report.normal_intervals ? "normal" : "percentile"},
                    {"redrawn_replicates", report.redrawn_replicates},
                    {"targets", std::move(targets)}};
  return root.dump(2);
}

}  // namespace cce
