#include "app.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "cce/error.hpp"
#include "cce/estimators.hpp"
#include "cce/inference.hpp"

namespace cce::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one line; double quotes group a field and "" is a literal quote.
std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

char detect_delimiter(const std::string& header) {
  char best = ',';
  std::ptrdiff_t most = 0;
  for (char c : {',', ';', '\t'}) {
    const auto n = std::count(header.begin(), header.end(), c);
    if (n > most) {
      most = n;
      best = c;
    }
  }
  return best;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string delimiter_name(char d) {
  switch (d) {
    case ',': return "comma";
    case ';': return "semicolon";
    case '\t': return "tab";
    default: return std::string(1, d);
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string full(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_full(const std::string& s) {
  if (s == "NA" || s.empty()) return kNaN;
  const auto v = parse_number(s);
  if (!v) throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  return *v;
}

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::string fill(width - std::min(width, display_width(s)), ' ');
  return left ? s + fill : fill + s;
}

// --- pipeline ---------------------------------------------------------------

BootstrapSpec bootstrap_spec(const RunConfig& c) {
  BootstrapSpec s;
  s.replications = c.bootstrap;
  s.seed = c.seed;
  s.confidence_level = c.level;
  s.normal_intervals = c.normal_ci;
  s.workers = std::max(1u, c.threads);
  return s;
}

InferenceInfo inference_info(const RunConfig& c) {
  return {c.bootstrap, c.seed, c.level, c.normal_ci};
}

std::vector<Cell> cells_of(const IntervalSummary& s) {
  std::vector<Cell> out;
  for (std::size_t j = 0; j < s.point.size(); ++j) out.push_back({s.point[j], s.se[j], s.ci_lower[j], s.ci_upper[j]});
  return out;
}

std::vector<Cell> point_cells(const std::vector<double>& values) {
  std::vector<Cell> out;
  for (double v : values) out.push_back({v, kNaN, kNaN, kNaN});
  return out;
}

RunResult tables_from_report(const InferenceReport& report, const ProportionGrid& grid, const InferenceInfo& info) {
  RunResult r;
  r.components = {TableKind::Components, grid, {}, info};
  r.contributions = {TableKind::Contributions, grid, {}, info};
  for (const auto& t : report.targets) {
    r.components.columns.push_back(
        {t.point.label(), cells_of(t.components), Cell{t.mean, t.mean_se, t.mean_ci_lower, t.mean_ci_upper}});
    r.contributions.columns.push_back(
        {t.point.label(),
         t.contributions ? cells_of(*t.contributions) : point_cells(std::vector<double>(grid.intervals(), kNaN)),
         std::nullopt});
  }
  return r;
}

RunResult tables_from_points(const std::vector<Decomposition>& ds, const ProportionGrid& grid) {
  RunResult r;
  r.components = {TableKind::Components, grid, {}, {}};
  r.contributions = {TableKind::Contributions, grid, {}, {}};
  for (const auto& d : ds) {
    r.components.columns.push_back({d.label(), point_cells(d.components()), Cell{aggregate_mean(d), kNaN, kNaN, kNaN}});
    const auto& c = d.components();
    const bool nonzero = std::any_of(c.begin(), c.end(), [](double v) { return v != 0.0; });
    r.contributions.columns.push_back(
        {d.label(), point_cells(nonzero ? contributions(d).shares : std::vector<double>(c.size(), kNaN)),
         std::nullopt});
  }
  return r;
}

RunResult estimate_tables(const Sample& sample, const ProportionGrid& grid, const EstimatorSelector& estimator,
                          const RunConfig& config, std::size_t* redrawn) {
  if (config.bootstrap == 0) return tables_from_points(estimate(sample, grid, estimator), grid);
  const InferenceReport report = bootstrap(sample, grid, estimator, bootstrap_spec(config));
  if (redrawn) *redrawn = report.redrawn_replicates;
  return tables_from_report(report, grid, inference_info(config));
}

std::string render_plotdata(const ResultTable& components) {
  std::ostringstream out;
  out << "group\tinterval\tlower\tupper\tmidpoint\testimate\tci_lower\tci_upper\n";
  const auto& g = components.grid;
  for (const auto& col : components.columns) {
    for (std::size_t j = 0; j < g.intervals(); ++j) {
      const Cell& c = col.cells[j];
      out << col.label << '\t' << g.interval_label(j) << '\t' << full(g.lower(j)) << '\t' << full(g.upper(j)) << '\t'
          << full(0.5 * (g.lower(j) + g.upper(j))) << '\t' << full(c.estimate) << '\t' << full(c.ci_lower) << '\t'
          << full(c.ci_upper) << '\n';
    }
  }
  return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  f.close();
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

struct Provenance {
  std::string mode;
  ordered_json inputs = ordered_json::object();
  ordered_json timings = ordered_json::object();
};

void write_artifacts(RunResult& result, const RunConfig& config, Provenance prov) {
  const auto t0 = Clock::now();
  const fs::path dir(config.out);
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  const bool all = config.format == OutputFormat::All;
  if (all || config.format == OutputFormat::Text) {
    files.emplace_back("components.txt", render_text(result.components));
    files.emplace_back("contributions.txt", render_text(result.contributions));
  }
  if (all || config.format == OutputFormat::Delim) {
    files.emplace_back("components.delim", render_delim(result.components));
    files.emplace_back("contributions.delim", render_delim(result.contributions));
  }
  if (all || config.format == OutputFormat::Structured) {
    files.emplace_back("components.json", render_structured(result.components));
    files.emplace_back("contributions.json", render_structured(result.contributions));
  }
  files.emplace_back("plotdata.delim", render_plotdata(result.components));
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    result.artifacts.push_back(name);
  }
  prov.timings["write"] = seconds_since(t0);

  ordered_json manifest{
      {"tool", "cce"},
      {"version", kVersion},
      {"mode", prov.mode},
      {"inputs", prov.inputs},
      {"grid", result.components.grid.points()},
      {"inference",
       {{"method", config.bootstrap ? "bootstrap" : "none"},
        {"replications", config.bootstrap},
        {"seed", config.seed},
        {"level", config.level},
        {"interval", config.normal_ci ? "normal" : "percentile"},
        {"threads", std::max(1u, config.threads)}}},
      {"warnings", result.warnings},
      {"versions",
       {{"compiler", __VERSION__},
        {"cplusplus", __cplusplus},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"timings_seconds", prov.timings},
      {"artifacts", result.artifacts}};
  write_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
  result.artifacts.push_back("run_manifest.json");
}

ordered_json data_inputs(const RunConfig& c, const Ingested& in) {
  std::error_code ec;
  const auto bytes = fs::file_size(c.data, ec);
  return {{"data", c.data},
          {"bytes", ec ? 0 : bytes},
          {"delimiter", delimiter_name(in.delimiter)},
          {"response", c.response},
          {"covariates", c.covariates},
          {"rows_read", in.rows_read},
          {"rows_used", in.sample.size()},
          {"rows_rejected", in.rows_read - in.sample.size()}};
}

std::vector<double> full_profile(const RunConfig& c) {
  const std::size_t k = c.covariates.size();
  if (c.profile.empty()) {
    std::vector<double> x(k + 1, 0.0);
    x[0] = 1.0;
    return x;
  }
  if (c.profile.size() == k) {
    std::vector<double> x{1.0};
    x.insert(x.end(), c.profile.begin(), c.profile.end());
    return x;
  }
  if (c.profile.size() == k + 1) return c.profile;
  throw Error(ErrorCode::DimensionMismatch, "--profile has " + std::to_string(c.profile.size()) +
                                                " values; expected " + std::to_string(k) + " (one per covariate) or " +
                                                std::to_string(k + 1) + " (with the intercept first)");
}

void check_common(const RunConfig& c) {
  if (c.data.empty()) throw Error(ErrorCode::InvalidConfig, "--data is required");
  if (c.response.empty()) throw Error(ErrorCode::InvalidConfig, "--response is required");
  if (!(c.level > 0.0 && c.level < 1.0)) throw Error(ErrorCode::InvalidConfig, "--level must lie in (0, 1)");
  if (c.bootstrap == 1) throw Error(ErrorCode::InvalidConfig, "--bootstrap needs 0 (off) or at least 2 replications");
}

}  // namespace

// --- parsing ----------------------------------------------------------------

OutputFormat parse_format(const std::string& name) {
  if (name == "text") return OutputFormat::Text;
  if (name == "delim") return OutputFormat::Delim;
  if (name == "structured") return OutputFormat::Structured;
  if (name == "all") return OutputFormat::All;
  throw Error(ErrorCode::InvalidConfig, "unknown format '" + name + "'");
}

Ingested ingest(const std::string& path, const std::string& response, const std::vector<std::string>& covariates,
                char delimiter) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::FileNotFound, "cannot open '" + path + "'");

  std::string header;
  if (!std::getline(file, header)) throw Error(ErrorCode::ParseError, "'" + path + "' is empty (no header row)");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delim = delimiter ? delimiter : detect_delimiter(header);
  const auto names = split_fields(header, delim);

  std::vector<std::string> wanted{response};
  wanted.insert(wanted.end(), covariates.begin(), covariates.end());
  if (std::set<std::string>(wanted.begin(), wanted.end()).size() != wanted.size()) {
    throw Error(ErrorCode::InvalidConfig, "response and covariates must be distinct columns");
  }
  std::vector<std::size_t> index;
  for (const auto& w : wanted) {
    const auto it = std::find(names.begin(), names.end(), w);
    if (it == names.end()) {
      throw Error(ErrorCode::ParseError,
                  "row 0 (header), column '" + w + "': not found in '" + path + "' (delimiter " +
                      delimiter_name(delim) + ")");
    }
    index.push_back(static_cast<std::size_t>(it - names.begin()));
  }

  Ingested out{Sample({0.0}), {}, {}, 0, delim};
  std::vector<double> y;
  std::vector<double> xs;  // row-major covariates
  std::string line;
  std::size_t row = 0;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line, delim);
    std::vector<double> vals;
    for (std::size_t c = 0; c < wanted.size(); ++c) {
      const std::string raw = index[c] < fields.size() ? fields[index[c]] : std::string{};
      const auto v = parse_number(raw);
      if (!v) {
        out.warnings.push_back("row " + std::to_string(row) + ": column '" + wanted[c] + "' " +
                               (raw.empty() ? std::string("is missing") : "is not numeric ('" + raw + "')") +
                               "; row skipped");
        break;
      }
      vals.push_back(*v);
    }
    if (vals.size() != wanted.size()) continue;
    y.push_back(vals[0]);
    xs.insert(xs.end(), vals.begin() + 1, vals.end());
  }
  out.rows_read = row;
  if (y.empty()) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                "no usable rows in '" + path + "' (" + std::to_string(row) + " read, all rejected)");
  }
  if (covariates.empty()) {
    out.sample = Sample(std::move(y));
    return out;
  }
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto k = static_cast<Eigen::Index>(covariates.size());
  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) X(i, c + 1) = xs[static_cast<std::size_t>(i * k + c)];
  }
  out.sample = Sample(std::move(y), std::move(X));
  out.design_names.push_back("(Intercept)");
  out.design_names.insert(out.design_names.end(), covariates.begin(), covariates.end());
  return out;
}

ProportionGrid parse_grid(const std::string& spec) {
  const std::string s = trim(spec);
  if (s == "deciles") return ProportionGrid::deciles();
  if (s == "quartiles") return ProportionGrid::quartiles();
  std::vector<double> pts;
  for (const auto& field : split_fields(s, ',')) {
    const auto v = parse_number(field);
    if (!v) throw Error(ErrorCode::InvalidConfig, "grid point '" + field + "' is not a number");
    pts.push_back(*v);
  }
  return ProportionGrid::validate(pts);
}

// --- runs -------------------------------------------------------------------

RunResult run_fit(const RunConfig& config) {
  check_common(config);
  for (const auto& [name, baseline] : config.binary) {
    if (std::find(config.covariates.begin(), config.covariates.end(), name) == config.covariates.end()) {
      throw Error(ErrorCode::InvalidConfig, "--binary names '" + name + "', which is not a covariate");
    }
  }
  Provenance prov{"regression"};
  auto t0 = Clock::now();
  const ProportionGrid grid = parse_grid(config.grid);
  const std::vector<double> profile = full_profile(config);
  Ingested in = ingest(config.data, config.response, config.covariates, config.delimiter);
  if (!in.sample.has_covariates()) {
    // Intercept-only model.
    in.sample = Sample(in.sample.values(), Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(in.sample.size()), 1));
  }
  prov.timings["ingest"] = seconds_since(t0);

  RegressionEstimator est;
  est.mesh_size = config.mesh ? config.mesh : default_mesh_size(grid);
  est.monotonize = config.monotonize;
  est.profiles = {CovariateProfile(profile, "Reference")};
  for (std::size_t k = 0; k < config.covariates.size(); ++k) {
    const auto& name = config.covariates[k];
    const auto b = config.binary.find(name);
    est.coefficients.push_back({k + 1, b == config.binary.end() ? name : name + " to " + b->second});
  }
  est.process.workers = config.bootstrap == 0 ? std::max(1u, config.threads) : 1u;

  t0 = Clock::now();
  std::size_t redrawn = 0;
  RunResult result = estimate_tables(in.sample, grid, est, config, &redrawn);
  prov.timings["estimate"] = seconds_since(t0);
  result.warnings = std::move(in.warnings);
  if (redrawn) result.warnings.push_back(std::to_string(redrawn) + " bootstrap replicates were redrawn (degenerate resample)");

  prov.inputs = data_inputs(config, in);
  prov.inputs["profile"] = profile;
  prov.inputs["mesh"] = est.mesh_size;
  prov.inputs["monotonize"] = config.monotonize;
  write_artifacts(result, config, std::move(prov));
  return result;
}

RunResult run_empirical(const RunConfig& config) {
  check_common(config);
  if (!config.covariates.empty()) throw Error(ErrorCode::InvalidConfig, "--empirical takes no --covariates");
  Provenance prov{"empirical"};
  auto t0 = Clock::now();
  const ProportionGrid grid = parse_grid(config.grid);
  Ingested in = ingest(config.data, config.response, {}, config.delimiter);
  prov.timings["ingest"] = seconds_since(t0);

  t0 = Clock::now();
  RunResult result = estimate_tables(in.sample, grid, EmpiricalEstimator{}, config, nullptr);
  prov.timings["estimate"] = seconds_since(t0);
  result.warnings = std::move(in.warnings);
  prov.inputs = data_inputs(config, in);
  write_artifacts(result, config, std::move(prov));
  return result;
}

RunResult run(const RunConfig& config) {
  if (!config.components.empty()) {
    if (!config.data.empty()) throw Error(ErrorCode::InvalidConfig, "--components and --data are exclusive");
    Provenance prov{"components"};
    const ProportionGrid grid = parse_grid(config.grid);
    if (config.components.size() != grid.intervals()) {
      throw Error(ErrorCode::GridMismatch, std::to_string(config.components.size()) + " components for a grid of " +
                                               std::to_string(grid.intervals()) + " intervals");
    }
    RunResult result = tables_from_points({Decomposition(grid, config.components, "Reference")}, grid);
    prov.inputs["components"] = config.components;
    RunConfig plain = config;
    plain.bootstrap = 0;
    write_artifacts(result, plain, std::move(prov));
    return result;
  }
  return config.empirical ? run_empirical(config) : run_fit(config);
}

// --- rendering --------------------------------------------------------------

int display_decimals(double value) {
  const double a = std::fabs(value);
  if (a < 10.0) return 2;
  if (a < 100.0) return 1;
  return 0;
}

std::string format_cell(const Cell& cell, bool* starred) {
  if (std::isnan(cell.estimate)) return "NA";
  const int d = display_decimals(cell.estimate);
  std::string s = fixed(cell.estimate, d);
  if (std::isnan(cell.se)) return s;
  std::string se = fixed(cell.se, d);
  if (se.find_first_not_of("0.") == std::string::npos) {
    se = fixed(std::pow(10.0, -d), d) + "*";
    if (starred) *starred = true;
  }
  return s + "(" + se + ")";
}

std::string render_text(const ResultTable& table) {
  const auto& g = table.grid;
  const bool components = table.kind == TableKind::Components;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"Λ(%)"};
  for (const auto& c : table.columns) head.push_back(c.label);
  rows.push_back(head);
  bool starred = false;
  for (std::size_t j = 0; j < g.intervals(); ++j) {
    std::vector<std::string> row{g.interval_label(j)};
    for (const auto& c : table.columns) row.push_back(format_cell(c.cells[j], &starred));
    rows.push_back(row);
  }
  if (components) {
    std::vector<std::string> row{"Average"};
    for (const auto& c : table.columns) row.push_back(c.average ? format_cell(*c.average, &starred) : "");
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], display_width(r[k]));
  }

  std::ostringstream out;
  out << (components ? "Estimated average and CCE given the grid" : "Contributions (in %) of components") << "\n\n";
  for (const auto& r : rows) {
    std::string line = pad(r[0], width[0], true);
    for (std::size_t k = 1; k < r.size(); ++k) line += "  " + pad(r[k], width[k], false);
    out << trim(line) << '\n';
  }
  const auto& inf = table.inference;
  if (inf.replications > 0) {
    out << "\nStandard errors in parentheses: nonparametric bootstrap, B = " << inf.replications
        << ", seed = " << inf.seed << ".\n";
  }
  if (starred) out << "* denotes values that were smaller than the one displayed.\n";
  return out.str();
}

std::string render_delim(const ResultTable& table) {
  const auto& inf = table.inference;
  const bool components = table.kind == TableKind::Components;
  std::ostringstream out;
  out << "# table=" << (components ? "components" : "contributions") << " replications=" << inf.replications
      << " seed=" << inf.seed << " level=" << full(inf.level) << " interval=" << (inf.normal ? "normal" : "percentile")
      << '\n';
  out << "column\tinterval\tlower\tupper\testimate\tse\tci_lower\tci_upper\n";
  auto emit = [&](const std::string& col, const std::string& label, const std::string& lo, const std::string& hi,
                  const Cell& c) {
    out << col << '\t' << label << '\t' << lo << '\t' << hi << '\t' << full(c.estimate) << '\t' << full(c.se) << '\t'
        << full(c.ci_lower) << '\t' << full(c.ci_upper) << '\n';
  };
  const auto& g = table.grid;
  for (const auto& c : table.columns) {
    for (std::size_t j = 0; j < g.intervals(); ++j) {
      emit(c.label, g.interval_label(j), full(g.lower(j)), full(g.upper(j)), c.cells[j]);
    }
    if (c.average) emit(c.label, "Average", "", "", *c.average);
  }
  return out.str();
}

std::string render_structured(const ResultTable& table) {
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); };
  auto cell = [&](const Cell& c) {
    return ordered_json{{"estimate", num(c.estimate)}, {"se", num(c.se)}, {"ci_lower", num(c.ci_lower)},
                        {"ci_upper", num(c.ci_upper)}};
  };
  const auto& g = table.grid;
  ordered_json cols = ordered_json::array();
  for (const auto& c : table.columns) {
    ordered_json rows = ordered_json::array();
    for (std::size_t j = 0; j < g.intervals(); ++j) {
      ordered_json r{{"interval", g.interval_label(j)}, {"lower", g.lower(j)}, {"upper", g.upper(j)}};
      r.update(cell(c.cells[j]));
      rows.push_back(std::move(r));
    }
    ordered_json jc{{"label", c.label}, {"rows", std::move(rows)}};
    if (c.average) jc["average"] = cell(*c.average);
    cols.push_back(std::move(jc));
  }
  const auto& inf = table.inference;
  ordered_json root{
      {"table", table.kind == TableKind::Components ? "components" : "contributions"},
      {"grid", g.points()},
      {"inference",
       {{"method", inf.replications ? "bootstrap" : "none"},
        {"replications", inf.replications},
        {"seed", inf.seed},
        {"level", inf.level},
        {"interval", inf.normal ? "normal" : "percentile"}}},
      {"columns", std::move(cols)}};
  return root.dump(2) + "\n";
}

ResultTable parse_delim(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ResultTable t;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorCode::ParseError, "row 0: missing '# table=...' metadata line");
  }
  std::istringstream meta(line.substr(2));
  for (std::string kv; meta >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "table") t.kind = value == "components" ? TableKind::Components : TableKind::Contributions;
    if (key == "replications") t.inference.replications = std::stoull(value);
    if (key == "seed") t.inference.seed = std::stoull(value);
    if (key == "level") t.inference.level = parse_full(value);
    if (key == "interval") t.inference.normal = value == "normal";
  }
  std::getline(in, line);  // column header

  std::vector<double> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_fields(line, '\t');
    if (f.size() != 8) throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected 8 fields");
    if (t.columns.empty() || t.columns.back().label != f[0]) t.columns.push_back({f[0], {}, std::nullopt});
    auto& col = t.columns.back();
    const Cell c{parse_full(f[4]), parse_full(f[5]), parse_full(f[6]), parse_full(f[7])};
    if (f[1] == "Average") {
      col.average = c;
      continue;
    }
    col.cells.push_back(c);
    if (t.columns.size() == 1) {
      if (points.empty()) points.push_back(parse_full(f[2]));
      points.push_back(parse_full(f[3]));
    }
  }
  t.grid = ProportionGrid::validate(points);
  return t;
}

}  // namespace cce::app
