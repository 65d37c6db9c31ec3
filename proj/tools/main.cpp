#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "app.hpp"
#include "cce/error.hpp"

namespace {

char parse_delimiter(const std::string& s) {
  if (s == "comma" || s == ",") return ',';
  if (s == "semicolon" || s == ";") return ';';
  if (s == "tab" || s == "\\t" || s == "\t") return '\t';
  throw CLI::ValidationError("--delimiter", "expected comma, semicolon or tab");
}

}  // namespace

int main(int argc, char** argv) {
  cce::app::RunConfig config;
  config.threads = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"Compound expectation (CE) and conditional compound expectation (CCE) decompositions"};
  app.set_version_flag("--version", cce::app::kVersion);
  app.set_config("--config", "", "TOML/INI file whose keys mirror the long flag names");

  std::string format = "all";
  std::string delimiter;
  std::vector<std::string> binary;

  app.add_option("--data", config.data, "Delimited input file with a header row");
  app.add_option("--response", config.response, "Outcome column");
  app.add_option("--covariates", config.covariates, "Covariate columns; an intercept is added")->delimiter(',');
  app.add_option("--profile", config.profile,
                 "Reference covariate values (one per covariate, or intercept first)")
      ->delimiter(',');
  app.add_option("--grid", config.grid, "deciles, quartiles, or cut-points like 0,0.5,0.9,1")
      ->capture_default_str();
  app.add_option("--mesh", config.mesh, "Quantile-regression mesh size (default: >= 1000, grid compatible)");
  app.add_option("--bootstrap", config.bootstrap, "Bootstrap replications (0 disables)")->capture_default_str();
  app.add_option("--seed", config.seed, "Bootstrap seed")->capture_default_str();
  app.add_option("--level", config.level, "Confidence level")->capture_default_str();
  app.add_option("--out", config.out, "Output directory")->capture_default_str();
  app.add_option("--format", format, "Artifacts to write")
      ->check(CLI::IsMember({"text", "delim", "structured", "all"}))
      ->capture_default_str();
  app.add_flag("--empirical", config.empirical, "Exact CE of the response, no covariates");
  app.add_flag("--monotonize", config.monotonize, "Rearrange profile quantiles to be monotone");
  app.add_flag("--normal-ci", config.normal_ci, "Normal intervals instead of bootstrap percentiles");
  app.add_option("--delimiter", delimiter, "Input delimiter: comma, semicolon or tab (default: detect)");
  app.add_option("--binary", binary, "Indicator covariate NAME[=BASELINE]; column titled 'NAME to BASELINE'");
  app.add_option("--components", config.components, "Fixture mode: component values, one per interval")
      ->delimiter(',');
  app.add_option("--threads", config.threads, "Worker threads (results do not depend on this)");

  try {
    app.parse(argc, argv);
    config.format = cce::app::parse_format(format);
    if (!delimiter.empty()) config.delimiter = parse_delimiter(delimiter);
    for (const auto& b : binary) {
      const auto eq = b.find('=');
      config.binary[b.substr(0, eq)] = eq == std::string::npos ? "baseline" : b.substr(eq + 1);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto result = cce::app::run(config);
    constexpr std::size_t kShown = 20;
    for (std::size_t i = 0; i < result.warnings.size() && i < kShown; ++i) {
      std::cerr << "warning: " << result.warnings[i] << '\n';
    }
    if (result.warnings.size() > kShown) {
      std::cerr << "warning: " << result.warnings.size() - kShown << " more (see run_manifest.json)\n";
    }
    std::cout << "wrote";
    for (const auto& a : result.artifacts) std::cout << ' ' << a;
    std::cout << " to " << config.out << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
