#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sstream>
#include <string>

#include "ibplab/cli.hpp"

using namespace ibplab;
using namespace ibplab::cli;

namespace {

ExperimentConfig parse_one(const std::string& text) {
  const auto r = parse_config(text);
  REQUIRE(r.ok());
  REQUIRE(r.configs.size() == 1);
  return r.configs.front();
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

const char* kGaussian = R"(
[[experiment]]
experiment = "bismut_gradient"
system = "euclidean-bm:1"
functional = "coord:0@1"
v0 = "1"
expected = 1.0
n_paths = 4000
steps_per_unit = 64
seed = 5
)";

}  // namespace

TEST_CASE("registry") {
  CHECK(registry().size() == 18);
  REQUIRE(find_experiment("lemma21_integrated_check") != nullptr);
  CHECK(find_experiment("lemma21_integrated_check")->kind == RowKind::Identity);
  CHECK(find_experiment("bismut_gradient")->kind == RowKind::Oracle);
  CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("minimal table parses with defaults") {
  const auto c = parse_one(R"(
# comment
[[experiment]]
experiment = "function_ibp_check"   # trailing comment
system = sphere2-bm
functional = "coord:2@1"
h = "h:linear"
)");
  CHECK(c.experiment == "function_ibp_check");
  CHECK(c.system == "sphere2-bm");
  CHECK(c.T == 1.0);
  CHECK(c.steps_per_unit == 512);
  CHECK(c.z_threshold == 4.0);
  CHECK(c.seed == 1);
  CHECK(c.n_paths.value_or(0) == 100000);

  ParseOptions opts;
  opts.default_seed = 77;
  CHECK(parse_config("[[experiment]]\nexperiment = \"girsanov_martingale\"\nsystem = \"euclidean-bm:1\"\nh = \"h:linear\"\n",
                     opts)
            .configs.front()
            .seed == 77);
}

TEST_CASE("parse errors carry line numbers") {
  const auto unknown = parse_config("[[experiment]]\nexperiment = \"bismut_gradient_typo\"\nsystem = \"sphere2-bm\"\n");
  REQUIRE_FALSE(unknown.ok());
  CHECK(unknown.errors.front().code == Errc::UnknownName);
  CHECK(unknown.errors.front().line == 2);
  CHECK(to_string(unknown.errors.front()).rfind("line 2: UnknownName: ", 0) == 0);

  const auto dup = parse_config("[[experiment]]\nexperiment = \"girsanov_martingale\"\nseed = 1\nseed = 2\n");
  REQUIRE_FALSE(dup.ok());
  CHECK(dup.errors.front().line == 4);

  const auto key = parse_config("[[experiment]]\nexperimnt = \"x\"\n");
  REQUIRE_FALSE(key.ok());
  CHECK(key.errors.front().line == 2);

  const auto num = parse_config("[[experiment]]\nexperiment = \"girsanov_martingale\"\nsystem = \"euclidean-bm:1\"\nT = 1.0x\n");
  REQUIRE_FALSE(num.ok());
  CHECK(num.errors.front().code == Errc::ParseError);
  CHECK(num.errors.front().line == 4);

  const auto missing = parse_config("[[experiment]]\nexperiment = \"bismut_gradient\"\nsystem = \"euclidean-bm:1\"\nfunctional = \"coord:0@1\"\n");
  CHECK_FALSE(missing.ok());

  const auto header = parse_config("[experiment]\n");
  CHECK_FALSE(header.ok());
}

TEST_CASE("off-grid times snap with a warning") {
  const auto r = parse_config(R"([[experiment]]
experiment = "lemma21_integrated_check"
system = "euclidean-bm:1"
functional = "coord:0@1"
h = "h:quadratic"
t = 0.3001
steps_per_unit = 512
)");
  REQUIRE(r.ok());
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings.front().line == 6);
  REQUIRE(r.configs.front().t.has_value());
  CHECK(*r.configs.front().t == doctest::Approx(154.0 / 512.0).epsilon(1e-12));
}

TEST_CASE("suite exit codes") {
  CHECK(run_suite({}).exit_code == 0);
  CHECK(run_suite({}).rows.empty());

  auto gauss = parse_one(kGaussian);
  SuiteOptions opts;
  opts.record_timing = false;
  const auto ok = run_suite({gauss}, opts);
  REQUIRE(ok.rows.size() == 1);
  CHECK(ok.rows.front().status == "pass");
  CHECK(ok.exit_code == 0);

  // Corrupted right-hand side of a true identity must be caught.
  auto broken = parse_one(R"([[experiment]]
experiment = "function_ibp_check"
system = "euclidean-bm:1"
functional = "coord:0@1"
h = "h:linear"
n_paths = 20000
steps_per_unit = 64
debug_rhs_scale = 1.1
)");
  const auto bad = run_suite({broken}, opts);
  REQUIRE(bad.rows.size() == 1);
  CHECK(bad.rows.front().status == "fail");
  CHECK(bad.exit_code == 1);

  // Invalid window: the row is dropped and the suite reports invalid parameters.
  auto window = parse_one(R"([[experiment]]
experiment = "thalmaier_gradient"
system = "euclidean-bm:1"
functional = "coord:0@1"
v0 = "1"
r = 0.75
width = 0.5
expected = 1
n_paths = 100
steps_per_unit = 64
)");
  const auto invalid = run_suite({window, gauss}, opts);
  CHECK(invalid.exit_code == 2);
  CHECK(invalid.rows.size() == 1);
}

TEST_CASE("z above the threshold fails an identity row") {
  auto c = parse_one(R"([[experiment]]
experiment = "function_ibp_check"
system = "euclidean-bm:1"
functional = "coord:0@1"
h = "h:linear"
n_paths = 20000
steps_per_unit = 64
debug_rhs_scale = 1.1
z_threshold = 4
)");
  const auto row = run_experiment(c);
  CHECK(row.z > 4.0);
  CHECK(row.status == "fail");
  c.z_threshold = row.z + 1.0;
  CHECK(run_experiment(c).status == "pass");
}

TEST_CASE("reports") {
  auto gauss = parse_one(kGaussian);
  SuiteOptions opts;
  opts.record_timing = false;
  const auto rows = run_suite({gauss, gauss}, opts).rows;

  const auto csv = format_report(rows, ReportFormat::Csv);
  CHECK(csv == format_report(run_suite({gauss, gauss}, opts).rows, ReportFormat::Csv));
  std::stringstream lines(csv);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header ==
        "experiment,manifold,system,functional,h,T,n,m,seed,lhs,lhs_se,rhs,rhs_se,diff,diff_se,z,status,wall_ms");
  const auto fields = csv_fields(first);
  REQUIRE(fields.size() == 18);

  const auto json = nlohmann::json::parse(format_report(rows, ReportFormat::Json));
  REQUIRE(json.is_array());
  REQUIRE(json.size() == 2);
  const auto& j = json.at(0);
  CHECK(std::stod(fields[9]) == j.at("lhs").get<double>());
  CHECK(std::stod(fields[10]) == j.at("lhs_se").get<double>());
  CHECK(std::stod(fields[15]) == j.at("z").get<double>());
  CHECK(fields[16] == j.at("status").get<std::string>());
  CHECK(j.at("n").get<std::size_t>() == 4000);
  CHECK(j.at("m").get<int>() == 64);

  CHECK(parse_format("json") == ReportFormat::Json);
  CHECK(parse_format("csv") == ReportFormat::Csv);
  CHECK_THROWS_AS(parse_format("xml"), Error);

  try {
    emit_report(rows, ReportFormat::Csv, "/nonexistent-dir/out.csv");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
  }
}
