#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ibplab/error.hpp"
#include "ibplab/estimators.hpp"

namespace ibplab::cli {

enum class RowKind {
  /// Single estimate compared against a closed-form expected value.
  Oracle,
  /// Paired lhs/rhs identity judged by its z-score.
  Identity,
};

struct ExperimentInfo {
  std::string name;
  RowKind kind;
  std::string summary;
};

const std::vector<ExperimentInfo>& registry();
const ExperimentInfo* find_experiment(std::string_view name);

struct ExperimentConfig {
  int line = 0;
  std::string experiment;
  std::string manifold;
  std::string system;
  std::string functional;
  std::string h = "h:zero";
  std::string h_dir;
  std::string x0;
  std::string v0;
  std::string psi = "linear";
  std::string hfield = "hfield:zero";
  double T = 1.0;
  double tau = 0.0;
  std::optional<double> t;
  std::optional<double> r;
  std::optional<double> width;
  double eps = 0.01;
  std::optional<std::size_t> n_paths;
  int steps_per_unit = 512;
  std::size_t n_base_points = 256;
  std::uint64_t seed = 1;
  double z_threshold = 4.0;
  std::optional<double> expected;
  double se_mult = 3.0;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  std::optional<double> expected_lhs;
  std::string output;
  std::string format = "csv";
  double debug_rhs_scale = 1.0;
  std::optional<int> criterion;
};

struct Diagnostic {
  int line = 0;
  Errc code = Errc::ParseError;
  std::string message;
};

std::string to_string(const Diagnostic& d);

struct ParseOptions {
  std::uint64_t default_seed = 1;
};

struct ParseResult {
  std::vector<ExperimentConfig> configs;
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;
  bool ok() const noexcept { return errors.empty(); }
};

/// Flat key-value document: `[[experiment]]` opens a table, `key = value`
/// lines fill it, `#` starts a comment.
ParseResult parse_config(std::string_view text, const ParseOptions& opts = {});

struct ResultRow {
  std::string experiment;
  std::string manifold;
  std::string system;
  std::string functional;
  std::string h;
  double T = 0.0;
  std::size_t n = 0;
  int m = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double diff = 0.0;
  double diff_se = 0.0;
  double z = 0.0;
  std::string status;
  double wall_ms = 0.0;
};

/// Runs one experiment; throws ibplab::Error on invalid parameters.
ResultRow run_experiment(const ExperimentConfig& config, const RunOptions& run = {});

struct SuiteOptions {
  RunOptions run;
  /// Writes wall_ms = 0 so identical inputs give identical bytes.
  bool record_timing = true;
  bool verbose = false;
};

struct SuiteResult {
  std::vector<ResultRow> rows;
  int exit_code = 0;
};

/// Exit codes: 0 all pass, 1 statistical failure, 2 invalid experiment parameters.
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const SuiteOptions& opts = {});

enum class ReportFormat { Csv, Json };

ReportFormat parse_format(std::string_view text);
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format);
/// Writes to path ("-" for stdout); throws IoError.
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::string& path);

}  // namespace ibplab::cli
