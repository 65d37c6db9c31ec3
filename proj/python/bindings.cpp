#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cce/error.hpp"
#include "cce/estimators.hpp"
#include "cce/inference.hpp"
#include "cce/oracle.hpp"
#include "cce/quantreg.hpp"

namespace py = pybind11;
using namespace cce;

namespace {

Sample make_sample(std::vector<double> y, std::optional<Eigen::MatrixXd> X) {
  return X ? Sample(std::move(y), std::move(*X)) : Sample(std::move(y));
}

py::dict summary_dict(const IntervalSummary& s) {
  py::dict d;
  d["point"] = s.point;
  d["se"] = s.se;
  d["ci_lower"] = s.ci_lower;
  d["ci_upper"] = s.ci_upper;
  return d;
}

oracle::KnownDistribution make_distribution(const std::string& name, const std::vector<double>& p) {
  const std::size_t arity = name == "exponential" ? 1 : name == "two_point" ? 3 : 2;
  if (p.size() != arity) {
    throw Error(ErrorCode::InvalidDistribution, name + " takes " + std::to_string(arity) + " parameters");
  }
  if (name == "uniform") return oracle::KnownDistribution(oracle::Uniform{p[0], p[1]});
  if (name == "exponential") return oracle::KnownDistribution(oracle::Exponential{p[0]});
  if (name == "normal") return oracle::KnownDistribution(oracle::Normal{p[0], p[1]});
  if (name == "lognormal") return oracle::KnownDistribution(oracle::LogNormal{p[0], p[1]});
  if (name == "two_point") return oracle::KnownDistribution(oracle::TwoPoint{p[0], p[1], p[2]});
  throw Error(ErrorCode::InvalidDistribution, "unknown distribution '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compound expectations: mean decompositions over quantile-proportion grids";

  // Messages carry the error code prefix, e.g. "RankDeficient: ...".
  py::register_exception<Error>(m, "CCEError", PyExc_ValueError);

  py::class_<ProportionGrid>(m, "ProportionGrid")
      .def(py::init([](const std::vector<double>& points) { return ProportionGrid::validate(points); }),
           py::arg("points"))
      .def_static("uniform", &ProportionGrid::uniform, py::arg("intervals"))
      .def_static("deciles", &ProportionGrid::deciles)
      .def_static("quartiles", &ProportionGrid::quartiles)
      .def_property_readonly("points", &ProportionGrid::points)
      .def_property_readonly("weights", &ProportionGrid::weights)
      .def_property_readonly("intervals", &ProportionGrid::intervals)
      .def("labels",
           [](const ProportionGrid& g) {
             std::vector<std::string> out;
             for (std::size_t j = 0; j < g.intervals(); ++j) out.push_back(g.interval_label(j));
             return out;
           })
      .def("__len__", &ProportionGrid::intervals)
      .def("__eq__", [](const ProportionGrid& a, const ProportionGrid& b) { return a == b; })
      .def("__repr__", [](const ProportionGrid& g) {
        return "ProportionGrid(" + std::to_string(g.intervals()) + " intervals)";
      });

  py::class_<Decomposition>(m, "Decomposition")
      .def(py::init<ProportionGrid, std::vector<double>, std::string>(), py::arg("grid"), py::arg("components"),
           py::arg("label") = "")
      .def_property_readonly("grid", &Decomposition::grid)
      .def_property_readonly("components", &Decomposition::components)
      .def_property_readonly("label", &Decomposition::label)
      .def("mean", [](const Decomposition& d) { return aggregate_mean(d); })
      .def("contributions", [](const Decomposition& d) { return contributions(d).shares; })
      .def("__sub__", [](const Decomposition& a, const Decomposition& b) { return contrast(a, b); })
      .def("__repr__", [](const Decomposition& d) {
        return "Decomposition('" + d.label() + "', " + std::to_string(d.components().size()) + " components)";
      });

  m.def("aggregate_mean", &aggregate_mean, py::arg("decomposition"));
  m.def(
      "contributions", [](const Decomposition& d) { return contributions(d).shares; }, py::arg("decomposition"),
      "Percent shares of sum_j w_j |c_j|.");
  m.def("contrast", &contrast, py::arg("a"), py::arg("b"));

  m.def(
      "empirical_cce",
      [](std::vector<double> y, const ProportionGrid& grid, std::string label) {
        return empirical_cce(Sample(std::move(y)), grid, std::move(label));
      },
      py::arg("values"), py::arg("grid"), py::arg("label") = "Sample");

  py::class_<CoefficientVector>(m, "CoefficientVector")
      .def_readonly("beta", &CoefficientVector::beta)
      .def_readonly("tau", &CoefficientVector::tau)
      .def_readonly("loss", &CoefficientVector::achieved_loss)
      .def_readonly("basis", &CoefficientVector::basis);

  m.def(
      "fit_quantile_regression",
      [](const Eigen::MatrixXd& X, const std::vector<double>& y, double tau) {
        py::gil_scoped_release release;
        return fit_quantile_regression(X, y, QuantileLevel(tau));
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), "Exact pinball-loss minimizer; X includes any intercept column.");

  py::class_<CoefficientProcess>(m, "CoefficientProcess")
      .def_property_readonly("levels", &CoefficientProcess::levels)
      .def_property_readonly("betas", &CoefficientProcess::betas)
      .def("predict",
           [](const CoefficientProcess& p, const std::vector<double>& x, double tau) {
             return predict_quantile(p, CovariateProfile(x), QuantileLevel(tau));
           },
           py::arg("x"), py::arg("tau"));

  m.def(
      "fit_process",
      [](const Eigen::MatrixXd& X, const std::vector<double>& y, std::optional<std::vector<double>> levels,
         std::size_t mesh_size, unsigned workers) {
        ProcessOptions opts;
        opts.workers = workers;
        const std::vector<double> lv = levels ? *levels : midpoint_mesh(mesh_size);
        py::gil_scoped_release release;
        return fit_process(X, y, lv, opts);
      },
      py::arg("X"), py::arg("y"), py::arg("levels") = py::none(), py::arg("mesh_size") = 1000,
      py::arg("workers") = 1);

  m.def("midpoint_mesh", &midpoint_mesh, py::arg("mesh_size"));
  m.def("default_mesh_size", &default_mesh_size, py::arg("grid"), py::arg("minimum") = 1000);

  py::class_<ComponentCoefficients>(m, "ComponentCoefficients")
      .def_readonly("grid", &ComponentCoefficients::grid)
      .def_readonly("gamma", &ComponentCoefficients::gamma)
      .def_readonly("names", &ComponentCoefficients::covariate_names)
      .def(
          "cce",
          [](const ComponentCoefficients& c, const std::vector<double>& x, std::string label) {
            return cce_for_profile(c, CovariateProfile(x, std::move(label)));
          },
          py::arg("x"), py::arg("label") = "");

  m.def("component_coefficients", &component_coefficients, py::arg("process"), py::arg("grid"),
        py::arg("names") = std::vector<std::string>{});
  m.def(
      "rearranged_cce",
      [](const CoefficientProcess& p, const ProportionGrid& g, const std::vector<double>& x) {
        return rearranged_cce_for_profile(p, g, CovariateProfile(x));
      },
      py::arg("process"), py::arg("grid"), py::arg("x"));

  m.def(
      "bootstrap",
      [](std::vector<double> y, const ProportionGrid& grid, std::optional<Eigen::MatrixXd> X,
         std::vector<std::vector<double>> profiles, std::vector<std::size_t> coefficients, std::size_t mesh_size,
         bool monotonize, std::size_t replications, std::uint64_t seed, double level, bool normal, unsigned workers) {
        BootstrapSpec spec;
        spec.replications = replications;
        spec.seed = seed;
        spec.confidence_level = level;
        spec.normal_intervals = normal;
        spec.workers = workers;
        EstimatorSelector est = EmpiricalEstimator{};
        if (X) {
          RegressionEstimator reg;
          reg.mesh_size = mesh_size;
          reg.monotonize = monotonize;
          for (std::size_t k = 0; k < profiles.size(); ++k) {
            reg.profiles.emplace_back(profiles[k], "profile " + std::to_string(k));
          }
          for (std::size_t k : coefficients) reg.coefficients.push_back({k, "coefficient " + std::to_string(k)});
          est = reg;
        }
        const Sample sample = make_sample(std::move(y), std::move(X));
        InferenceReport report;
        {
          py::gil_scoped_release release;
          report = bootstrap(sample, grid, est, spec);
        }
        py::list targets;
        for (const auto& t : report.targets) {
          py::dict d;
          d["label"] = t.point.label();
          d["components"] = summary_dict(t.components);
          d["mean"] = py::dict(py::arg("point") = t.mean, py::arg("se") = t.mean_se,
                               py::arg("ci_lower") = t.mean_ci_lower, py::arg("ci_upper") = t.mean_ci_upper);
          d["contributions"] = t.contributions ? py::object(summary_dict(*t.contributions)) : py::none();
          targets.append(d);
        }
        py::dict out;
        out["replications"] = report.replications;
        out["seed"] = report.seed;
        out["redrawn_replicates"] = report.redrawn_replicates;
        out["targets"] = targets;
        out["json"] = to_json(report);
        return out;
      },
      py::arg("values"), py::arg("grid"), py::arg("X") = py::none(), py::arg("profiles") = std::vector<std::vector<double>>{},
      py::arg("coefficients") = std::vector<std::size_t>{}, py::arg("mesh_size") = 1000, py::arg("monotonize") = false,
      py::arg("replications") = 200, py::arg("seed") = 20240101, py::arg("level") = 0.95, py::arg("normal") = false,
      py::arg("workers") = 1,
      "Pairs bootstrap. Without X: empirical CE of the values. With X: regression CCE for each profile, then "
      "each requested gamma column.");

  py::module_ oracle = m.def_submodule("oracle", "Closed-form distributions for validation");
  oracle.def(
      "true_quantile",
      [](const std::string& name, const std::vector<double>& params, double u) {
        return oracle::true_quantile(make_distribution(name, params), u);
      },
      py::arg("name"), py::arg("params"), py::arg("u"));
  oracle.def(
      "true_component",
      [](const std::string& name, const std::vector<double>& params, double a, double b) {
        return oracle::true_component(make_distribution(name, params), a, b);
      },
      py::arg("name"), py::arg("params"), py::arg("a"), py::arg("b"));
  oracle.def(
      "generate",
      [](const std::string& name, const std::vector<double>& params, std::size_t n, std::uint64_t seed) {
        return oracle::generate(make_distribution(name, params), n, seed).values();
      },
      py::arg("name"), py::arg("params"), py::arg("n"), py::arg("seed"));
}
