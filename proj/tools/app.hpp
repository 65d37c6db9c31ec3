#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cce/grid.hpp"
#include "cce/model.hpp"

namespace cce::app {

inline constexpr const char* kVersion = "0.1.0";

enum class OutputFormat { Text, Delim, Structured, All };

OutputFormat parse_format(const std::string& name);

struct RunConfig {
  std::string data;
  std::string response;
  std::vector<std::string> covariates;
  // k values (intercept implied) or k + 1 values starting with the intercept;
  // empty means the all-zero covariate profile.
  std::vector<double> profile;
  std::string grid = "deciles";
  std::size_t mesh = 0;  // 0: smallest grid-compatible size >= 1000
  std::size_t bootstrap = 200;  // 0 disables inference
  std::uint64_t seed = 20240101;
  double level = 0.95;
  std::string out = ".";
  OutputFormat format = OutputFormat::All;
  bool empirical = false;
  bool monotonize = false;
  bool normal_ci = false;

  char delimiter = 0;  // 0: detect from the header line
  // Indicator covariates and the label of their zero level; the column is
  // then titled "NAME to BASELINE".
  std::map<std::string, std::string> binary;
  // Fixture mode: components supplied directly, no data file.
  std::vector<double> components;
  unsigned threads = 1;
};

struct Ingested {
  Sample sample;
  std::vector<std::string> design_names;  // "(Intercept)" first when covariates are present
  std::vector<std::string> warnings;
  std::size_t rows_read = 0;
  char delimiter = ',';
};

// Reads a delimited text file with a header row. Rows with a missing or
// non-numeric value in a used column are dropped with a warning naming the
// data row (1-based, header excluded).
// Throws Error{FileNotFound | ParseError | EmptyAfterFiltering}.
Ingested ingest(const std::string& path, const std::string& response, const std::vector<std::string>& covariates,
                char delimiter = 0);

// "deciles", "quartiles" or an explicit list "0,0.25,0.5,1".
ProportionGrid parse_grid(const std::string& spec);

struct Cell {
  double estimate = 0.0;
  // NaN when no inference was run (or the share is undefined).
  double se, ci_lower, ci_upper;
};

struct ResultColumn {
  std::string label;
  std::vector<Cell> cells;     // one per interval
  std::optional<Cell> average;  // components table only
};

struct InferenceInfo {
  std::size_t replications = 0;  // 0: point estimates only
  std::uint64_t seed = 0;
  double level = 0.95;
  bool normal = false;
};

enum class TableKind { Components, Contributions };

struct ResultTable {
  TableKind kind = TableKind::Components;
  ProportionGrid grid = ProportionGrid::deciles();
  std::vector<ResultColumn> columns;
  InferenceInfo inference;
};

struct RunResult {
  ResultTable components;
  ResultTable contributions;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;  // file names written, in order
};

// Regression CCE: Reference profile column followed by one coefficient column
// per covariate (no covariates: intercept-only model). Writes the requested
// artifacts into config.out.
RunResult run_fit(const RunConfig& config);
// Exact CE of the response alone; no covariates allowed.
RunResult run_empirical(const RunConfig& config);
// Dispatch on config: fixture components, --empirical, or regression.
RunResult run(const RunConfig& config);

// Display rounding: two decimals below 10, one below 100, none above.
int display_decimals(double value);
std::string format_cell(const Cell& cell, bool* starred = nullptr);

std::string render_text(const ResultTable& table);
std::string render_delim(const ResultTable& table);
std::string render_structured(const ResultTable& table);
// Inverse of render_delim; full precision, so re-rendering is exact.
ResultTable parse_delim(const std::string& text);

}  // namespace cce::app
