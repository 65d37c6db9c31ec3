#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "app.hpp"
#include "cce/error.hpp"
#include "cce/oracle.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cce;
using namespace cce::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() / ("cce_cli_" + std::to_string(::getpid()) + "_" +
                                                  std::to_string(counter++) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name, std::ios::binary) << text;
  return dir / name;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidConfig;
}

// Mirrors tests/data/golden_run.toml.
RunConfig golden_config(const fs::path& out) {
  RunConfig c;
  c.data = std::string(CCE_TEST_DATA_DIR) + "/synthetic_stays.csv";
  c.response = "los";
  c.covariates = {"age", "male", "severe"};
  c.profile = {45, 0, 0};
  c.binary = {{"male", "Female"}, {"severe", "Mild"}};
  c.grid = "deciles";
  c.mesh = 100;
  c.bootstrap = 50;
  c.seed = 7;
  c.out = out.string();
  return c;
}

RunConfig data_config(const fs::path& data, const fs::path& out) {
  RunConfig c;
  c.data = data.string();
  c.response = "y";
  c.out = out.string();
  return c;
}

}  // namespace

TEST_CASE("ingest builds the design with an intercept") {
  const auto dir = scratch("ingest");
  const auto in = ingest(write(dir, "a.csv", "y,x\n1,2\n3,4\n5,6\n").string(), "y", {"x"});
  CHECK(in.sample.size() == 3);
  CHECK(in.sample.covariates().cols() == 2);
  CHECK(in.sample.covariates()(2, 0) == 1.0);
  CHECK(in.sample.covariates()(2, 1) == 6.0);
  CHECK(in.design_names == std::vector<std::string>{"(Intercept)", "x"});
  CHECK(in.warnings.empty());
  CHECK_FALSE(ingest((dir / "a.csv").string(), "y", {}).sample.has_covariates());
}

TEST_CASE("ingest rejects bad rows by number and reports header problems") {
  const auto dir = scratch("rows");
  std::string text = "id,y,x\n";
  for (int r = 1; r <= 8; ++r) text += "r" + std::to_string(r) + "," + (r == 7 ? "" : std::to_string(r)) + ",1.5\n";
  const auto in = ingest(write(dir, "b.csv", text).string(), "y", {"x"});
  CHECK(in.sample.size() == 7);
  CHECK(in.rows_read == 8);
  REQUIRE(in.warnings.size() == 1);
  CHECK(in.warnings[0].find("row 7") != std::string::npos);

  CHECK(code_of([&] { ingest((dir / "b.csv").string(), "nope", {}); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { ingest((dir / "missing.csv").string(), "y", {}); }) == ErrorCode::FileNotFound);
  CHECK(code_of([&] { ingest(write(dir, "e.csv", "").string(), "y", {}); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { ingest(write(dir, "f.csv", "y\nx\n\n").string(), "y", {}); }) ==
        ErrorCode::EmptyAfterFiltering);
  CHECK(code_of([&] { ingest((dir / "b.csv").string(), "y", {"y"}); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("ingest detects delimiters and handles quoting and line endings") {
  const auto dir = scratch("delims");
  const auto semi = ingest(write(dir, "s.csv", "\xEF\xBB\xBF\"y\";x\r\n1.5;2\r\n2,5;3\r\n").string(), "y", {"x"});
  CHECK(semi.delimiter == ';');
  CHECK(semi.sample.size() == 1);  // decimal comma rejected
  CHECK(semi.warnings.at(0).find("row 2") != std::string::npos);
  const auto tab = ingest(write(dir, "t.tsv", "a\ty\n\"x, y\"\t-4e-1\n").string(), "y", {});
  CHECK(tab.delimiter == '\t');
  CHECK(tab.sample.values() == std::vector<double>{-0.4});
  // Detection would pick ';' here; the override keeps ',' and finds y.
  const auto forced = ingest(write(dir, "u.txt", "a;b;c,y\n1;2;3,4\n").string(), "y", {}, ',');
  CHECK(forced.sample.values() == std::vector<double>{4.0});
}

TEST_CASE("grid specifications") {
  CHECK(parse_grid("deciles") == ProportionGrid::deciles());
  CHECK(parse_grid(" quartiles ") == ProportionGrid::quartiles());
  CHECK(parse_grid("0,0.5,0.9,1").intervals() == 3);
  CHECK(code_of([] { parse_grid("0,a,1"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_grid("0,0.5"); }) == ErrorCode::NotCoveringUnit);
}

TEST_CASE("display rounding and the star floor") {
  CHECK(format_cell({0.22, 0.01, 0, 0}) == "0.22(0.01)");
  CHECK(format_cell({0.07, 0.003, 0, 0}) == "0.07(0.01*)");
  CHECK(format_cell({13.305, 0.17, 0, 0}) == "13.3(0.2)");
  CHECK(format_cell({-1.17, 0.56, 0, 0}) == "-1.17(0.56)");
  CHECK(format_cell({123.4, 0.2, 0, 0}) == "123(1*)");
  CHECK(format_cell({-0.001, NAN, NAN, NAN}) == "0.00");
  CHECK(format_cell({NAN, NAN, NAN, NAN}) == "NA");
  bool starred = false;
  format_cell({1.0, 0.0, 1.0, 1.0}, &starred);
  CHECK(starred);
}

TEST_CASE("run_empirical examples") {
  const auto dir = scratch("emp");
  std::string text = "y\n";
  for (int v = 10; v >= 1; --v) text += std::to_string(v) + "\n";
  auto c = data_config(write(dir, "d.csv", text), dir / "out");
  c.empirical = true;
  c.bootstrap = 0;
  const auto r = run(c);
  REQUIRE(r.components.columns.size() == 1);
  for (std::size_t j = 0; j < 10; ++j) CHECK(r.components.columns[0].cells[j].estimate == doctest::Approx(j + 1.0));
  CHECK(r.components.columns[0].average->estimate == doctest::Approx(5.5));
  const std::string txt = slurp(dir / "out" / "components.txt");
  CHECK(txt.find("0-10") != std::string::npos);
  CHECK(txt.find("90-100") != std::string::npos);
  CHECK(txt.find("Average") != std::string::npos);
  CHECK(txt.find("0(") == std::string::npos);  // no inference, no ses
  CHECK(txt.find("Standard errors") == std::string::npos);

  c.grid = "0,1";
  c.out = (dir / "unit").string();
  const auto one = run(c);
  REQUIRE(one.components.columns[0].cells.size() == 1);
  CHECK(one.components.columns[0].cells[0].estimate == doctest::Approx(5.5));

  c.covariates = {"y2"};
  CHECK(code_of([&] { run(c); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("same configuration and seed give byte-identical artifacts") {
  const auto dir = scratch("determinism");
  auto a = golden_config(dir / "a");
  auto b = golden_config(dir / "b");
  a.bootstrap = b.bootstrap = 20;
  a.threads = 1;
  b.threads = 3;
  const auto ra = run(a);
  run(b);
  for (const auto& name : ra.artifacts) {
    if (name == "run_manifest.json") continue;  // carries timings
    CAPTURE(name);
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
}

TEST_CASE("intercept-only fit: Average row equals the sample mean") {
  const auto dir = scratch("intercept");
  const auto s = oracle::generate(oracle::KnownDistribution(oracle::Exponential{1.0}), 500, 31);
  std::ostringstream text;
  text.precision(17);
  text << "y\n";
  for (double v : s.values()) text << v << '\n';
  auto c = data_config(write(dir, "exp.csv", text.str()), dir / "out");
  c.bootstrap = 0;
  c.mesh = 1000;
  const auto r = run(c);
  REQUIRE(r.components.columns.size() == 1);
  CHECK(std::fabs(r.components.columns[0].average->estimate - s.mean()) < 1e-6);
}

TEST_CASE("planted location shift shows up in the contrast column") {
  const auto dir = scratch("shift");
  testing::Gen gen(99);
  std::ostringstream text;
  text.precision(17);
  text << "y,g\n";
  for (int i = 0; i < 4000; ++i) {
    const int g = gen.coin() ? 1 : 0;
    text << 1.0 + 2.0 * g + gen.normal() << ',' << g << '\n';
  }
  auto c = data_config(write(dir, "shift.csv", text.str()), dir / "out");
  c.covariates = {"g"};
  c.binary = {{"g", "control"}};
  c.bootstrap = 0;
  c.mesh = 200;
  const auto r = run(c);
  REQUIRE(r.components.columns.size() == 2);
  const auto& contrast = r.components.columns[1];
  CHECK(contrast.label == "g to control");
  for (const auto& cell : contrast.cells) CHECK(std::fabs(cell.estimate - 2.0) < 0.3);
  CHECK(std::fabs(contrast.average->estimate - 2.0) < 0.1);
}

TEST_CASE("fixture mode reproduces reference contributions") {
  const auto dir = scratch("fixture");
  RunConfig c;
  c.components = {-1.17, 3.96, 6.27, 8.49, 10.7, 13.1, 15.9, 19.2, 23.3, 33.3};
  c.out = dir.string();
  const std::vector<double> expected{0.86, 2.93, 4.63, 6.27, 7.86, 9.70, 11.8, 14.2, 17.2, 24.6};
  const auto r = run(c);
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(std::fabs(r.contributions.columns[0].cells[j].estimate - expected[j]) <= 0.15);
  }
  CHECK(r.components.columns[0].average->estimate == doctest::Approx(13.305));
  c.components.pop_back();
  CHECK(code_of([&] { run(c); }) == ErrorCode::GridMismatch);
}

TEST_CASE("delimited output round-trips to identical tables") {
  const auto dir = scratch("roundtrip");
  const auto r = run(golden_config(dir));
  for (const auto& [table, stem] : {std::pair{&r.components, "components"}, std::pair{&r.contributions, "contributions"}}) {
    const std::string delim = slurp(dir / (std::string(stem) + ".delim"));
    const ResultTable back = parse_delim(delim);
    CHECK(render_delim(back) == delim);
    CHECK(render_text(back) == slurp(dir / (std::string(stem) + ".txt")));
    CHECK(render_structured(back) == slurp(dir / (std::string(stem) + ".json")));
    CHECK(render_text(back) == render_text(*table));
  }
}

TEST_CASE("golden artifacts for the bundled dataset") {
  const auto dir = scratch("golden");
  const auto r = run(golden_config(dir));
  CHECK(r.warnings.size() == 2);
  for (const char* name : {"components.delim", "contributions.delim", "components.txt"}) {
    CAPTURE(name);
    CHECK(slurp(dir / name) == slurp(fs::path(CCE_GOLDEN_DIR) / name));
  }
  const std::string txt = slurp(dir / "components.txt");
  CHECK(txt.find("0.01*") != std::string::npos);
  CHECK(txt.find("* denotes values that were smaller than the one displayed.") != std::string::npos);
  CHECK(txt.find("\n0-10 ") != std::string::npos);
  CHECK(txt.find("male to Female") != std::string::npos);
  CHECK(txt.find("B = 50, seed = 7") != std::string::npos);
}

TEST_CASE("format selection and configuration errors") {
  const auto dir = scratch("formats");
  auto c = golden_config(dir / "text");
  c.bootstrap = 0;
  c.format = OutputFormat::Text;
  const auto r = run(c);
  CHECK(r.artifacts ==
        std::vector<std::string>{"components.txt", "contributions.txt", "plotdata.delim", "run_manifest.json"});
  CHECK_FALSE(fs::exists(dir / "text" / "components.delim"));
  CHECK(parse_format("structured") == OutputFormat::Structured);
  CHECK(code_of([] { parse_format("xml"); }) == ErrorCode::InvalidConfig);

  auto bad = golden_config(dir / "bad");
  bad.profile = {1, 2};
  CHECK(code_of([&] { run(bad); }) == ErrorCode::DimensionMismatch);
  bad = golden_config(dir / "bad");
  bad.binary = {{"sex", "F"}};
  CHECK(code_of([&] { run(bad); }) == ErrorCode::InvalidConfig);
  bad = golden_config(dir / "bad");
  bad.bootstrap = 1;
  CHECK(code_of([&] { run(bad); }) == ErrorCode::InvalidConfig);
  bad = golden_config(dir / "bad");
  bad.response = "";
  CHECK(code_of([&] { run(bad); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("plot data carries one row per group and interval") {
  const auto dir = scratch("plot");
  run(golden_config(dir));
  std::istringstream in(slurp(dir / "plotdata.delim"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "group\tinterval\tlower\tupper\tmidpoint\testimate\tci_lower\tci_upper");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4 * 10);
}
