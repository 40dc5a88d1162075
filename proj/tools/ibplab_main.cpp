#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ibplab/cli.hpp"

namespace cli = ibplab::cli;

namespace {

int cmd_list() {
  for (const auto& e : cli::registry()) {
    std::printf("%-26s %-10s %s\n", e.name.c_str(), e.kind == cli::RowKind::Oracle ? "oracle" : "identity",
                e.summary.c_str());
  }
  return 0;
}

int cmd_run(const std::string& path, int jobs, std::string out, std::string format, bool no_timing, bool serial) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return 3;
  }
  std::stringstream text;
  text << in.rdbuf();

  cli::ParseOptions popts;
  if (const char* env = std::getenv("IBPLAB_SEED")) {
    try {
      popts.default_seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: IBPLAB_SEED='" << env << "' is not an unsigned integer\n";
      return 2;
    }
  }
  const cli::ParseResult parsed = cli::parse_config(text.str(), popts);
  for (const auto& w : parsed.warnings) std::cerr << path << ": warning: " << cli::to_string(w) << "\n";
  if (!parsed.ok()) {
    for (const auto& d : parsed.errors) std::cerr << path << ": " << cli::to_string(d) << "\n";
    return 2;
  }

  cli::SuiteOptions sopts;
  sopts.run.threads = jobs;
  if (serial) sopts.run.execution = ibplab::Execution::ChunkedSerial;
  sopts.record_timing = !no_timing;
  sopts.verbose = true;
  const cli::SuiteResult result = cli::run_suite(parsed.configs, sopts);

  // Per-table output/format apply when the command line leaves them unset.
  if (out.empty() && !parsed.configs.empty()) out = parsed.configs.front().output;
  if (format.empty()) format = parsed.configs.empty() ? "csv" : parsed.configs.front().format;
  try {
    cli::emit_report(result.rows, cli::parse_format(format), out.empty() ? "-" : out);
  } catch (const ibplab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ibplab::Errc::IoError ? 3 : 2;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo checks of integration-by-parts and gradient formulas for SDE flows"};
  app.require_subcommand(1);

  std::string config;
  int jobs = 0;
  std::string out;
  std::string format;
  bool no_timing = false;
  bool serial = false;
  auto* run = app.add_subcommand("run", "run every experiment in a config file");
  run->add_option("config", config, "experiment file")->required();
  run->add_option("--jobs", jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out, "report path ('-' for stdout)");
  run->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--no-timing", no_timing, "write wall_ms = 0 (byte-reproducible reports)");
  run->add_flag("--serial", serial, "run chunks on the calling thread");
  auto* list = app.add_subcommand("list", "print the experiment registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (list->parsed()) return cmd_list();
  return cmd_run(config, jobs, out, format, no_timing, serial);
}
