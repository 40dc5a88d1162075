#include "ibplab/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ibplab::cli {

namespace {

const std::vector<ExperimentInfo> kRegistry = {
    {"bismut_gradient", RowKind::Oracle, "d(P_T f)(v0) by the full-interval derivative-flow weight"},
    {"thalmaier_gradient", RowKind::Oracle, "d(P_T f)(v0) with the weight restricted to [r, r+width]"},
    {"psi_weighted_gradient", RowKind::Oracle, "d(P_T f)(v0) with a deterministic weight psi"},
    {"crn_fd_gradient", RowKind::Oracle, "central finite difference of the endpoint on common draws"},
    {"thalmaier_vs_bismut", RowKind::Identity, "paired window estimator vs full-interval estimator"},
    {"psi_vs_bismut", RowKind::Identity, "paired psi-weighted estimator vs full-interval estimator"},
    {"fd_vs_bismut", RowKind::Identity, "paired finite difference vs full-interval estimator"},
    {"lemma21_integrated_check", RowKind::Identity, "E f(x_T) int_0^t <Tξ h', X dB> vs the secant weight"},
    {"function_ibp_check", RowKind::Identity, "E f(x_T) δV^h vs E df(V^h_T)"},
    {"pathspace_ibp", RowKind::Identity, "E dF(V^h) vs E F δV^h for a cylindrical F"},
    {"damped_ibp", RowKind::Identity, "integration by parts along damped parallel transport"},
    {"girsanov_invariance", RowKind::Identity, "E F(ξ∘H^τ) vs E F(ξ) exp(log-density)"},
    {"girsanov_martingale", RowKind::Identity, "E exp(log-density) vs 1"},
    {"girsanov_derivative", RowKind::Identity, "E dF(Tξ X h) vs E F int <Tξ X h', X dB>"},
    {"girsanov_derivative_fd", RowKind::Identity, "tau-central difference of the perturbed flow vs the same rhs"},
    {"girsanov_fd_vs_direct", RowKind::Identity, "tau-central difference vs direct derivative"},
    {"free_ibp", RowKind::Identity, "free path space identity with uniform base point"},
    {"free_damped_ibp", RowKind::Identity, "free path space identity along damped transport"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out)) throw Error(Errc::ParseError, "'" + v + "' is not a number");
  return out;
}

template <class Int>
Int to_integer(const std::string& v) {
  // Accept 1e5-style literals when they are exact integers.
  const double d = to_double(v);
  if (d < 0.0 || d != std::floor(d) || d > 9.0e18) throw Error(Errc::ParseError, "'" + v + "' is not a non-negative integer");
  return static_cast<Int>(d);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"experiment", [](auto& c, const auto& v) { c.experiment = v; }},
      {"manifold", [](auto& c, const auto& v) { c.manifold = v; }},
      {"system", [](auto& c, const auto& v) { c.system = v; }},
      {"functional", [](auto& c, const auto& v) { c.functional = v; }},
      {"h", [](auto& c, const auto& v) { c.h = v; }},
      {"h_dir", [](auto& c, const auto& v) { c.h_dir = v; }},
      {"x0", [](auto& c, const auto& v) { c.x0 = v; }},
      {"v0", [](auto& c, const auto& v) { c.v0 = v; }},
      {"psi", [](auto& c, const auto& v) { c.psi = v; }},
      {"hfield", [](auto& c, const auto& v) { c.hfield = v; }},
      {"T", [](auto& c, const auto& v) { c.T = to_double(v); }},
      {"tau", [](auto& c, const auto& v) { c.tau = to_double(v); }},
      {"t", [](auto& c, const auto& v) { c.t = to_double(v); }},
      {"r", [](auto& c, const auto& v) { c.r = to_double(v); }},
      {"width", [](auto& c, const auto& v) { c.width = to_double(v); }},
      {"eps", [](auto& c, const auto& v) { c.eps = to_double(v); }},
      {"n_paths", [](auto& c, const auto& v) { c.n_paths = to_integer<std::size_t>(v); }},
      {"steps_per_unit", [](auto& c, const auto& v) { c.steps_per_unit = to_integer<int>(v); }},
      {"n_base_points", [](auto& c, const auto& v) { c.n_base_points = to_integer<std::size_t>(v); }},
      {"seed", [](auto& c, const auto& v) { c.seed = to_integer<std::uint64_t>(v); }},
      {"z_threshold", [](auto& c, const auto& v) { c.z_threshold = to_double(v); }},
      {"expected", [](auto& c, const auto& v) { c.expected = to_double(v); }},
      {"se_mult", [](auto& c, const auto& v) { c.se_mult = to_double(v); }},
      {"rel_tol", [](auto& c, const auto& v) { c.rel_tol = to_double(v); }},
      {"abs_tol", [](auto& c, const auto& v) { c.abs_tol = to_double(v); }},
      {"expected_lhs", [](auto& c, const auto& v) { c.expected_lhs = to_double(v); }},
      {"output", [](auto& c, const auto& v) { c.output = v; }},
      {"format", [](auto& c, const auto& v) { c.format = v; }},
      {"debug_rhs_scale", [](auto& c, const auto& v) { c.debug_rhs_scale = to_double(v); }},
      {"criterion", [](auto& c, const auto& v) { c.criterion = to_integer<int>(v); }},
  };
  return table;
}

bool uses_gradient_direction(std::string_view name) {
  return name.find("gradient") != std::string_view::npos || name.ends_with("_vs_bismut");
}

bool is_free(std::string_view name) { return name.starts_with("free_"); }

bool is_girsanov(std::string_view name) { return name.starts_with("girsanov_"); }

std::size_t default_paths(std::string_view name) { return is_free(name) ? 2048 : 100000; }

Vec parse_vector(const std::string& text, const ManifoldSpec& spec, const char* what) {
  Vec v = Vec::Zero();
  std::stringstream ss(text);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= spec.ambient_dim()) break;
    v[i++] = to_double(trim(item));
  }
  if (i != spec.ambient_dim() || !ss.eof()) {
    throw Error(Errc::ParseError, std::string(what) + " needs " + std::to_string(spec.ambient_dim()) + " components");
  }
  return v;
}

Vec default_point(const ManifoldSpec& spec) {
  Vec x = Vec::Zero();
  if (spec.compact()) x[0] = 1.0;
  return x;
}

Vec default_direction(const ManifoldSpec& spec) {
  Vec u = Vec::Zero();
  u[spec.ambient_dim() - 1] = 1.0;
  return u;
}

CmProcess parse_h(const std::string& text, const Vec& u, const ManifoldSpec& spec) {
  if (text == "h:zero") return CmProcess::zero();
  if (text == "h:linear") return CmProcess::linear(u);
  if (text == "h:quadratic") return CmProcess::quadratic(u);
  if (text == "h:occupation") return CmProcess::occupation(u, spec.ambient_dim() - 1);
  throw Error(Errc::UnknownName, "unknown h-process '" + text + "'");
}

/// Everything an experiment needs, built from its strings.
struct Setup {
  SdeSystem system;
  PointOnM x;
  Vec v0;
  Vec h_dir;
  CylFunctional f;
  CmProcess h;
  std::optional<VectorFieldProcess> hfield;
  std::optional<WeightFunction> psi;
};

Setup build(const ExperimentConfig& c) {
  SdeSystem system = SdeSystem::parse(c.system);
  const ManifoldSpec& spec = system.manifold();
  if (!c.manifold.empty() && !(ManifoldSpec::parse(c.manifold) == spec)) {
    throw Error(Errc::InvalidArgument, "system " + c.system + " does not live on " + c.manifold);
  }
  const Vec x = c.x0.empty() ? default_point(spec) : parse_vector(c.x0, spec, "x0");
  if (!spec.contains(x)) throw Error(Errc::RangeError, "x0 is not on " + spec.name());
  const Vec h_dir = c.h_dir.empty() ? default_direction(spec) : parse_vector(c.h_dir, spec, "h_dir");
  const Vec v0 = c.v0.empty() ? h_dir : parse_vector(c.v0, spec, "v0");
  // The martingale check has no functional; report it as the constant 1.
  std::string functional = c.functional;
  if (functional.empty() && c.experiment == "girsanov_martingale") functional = "const:1@" + std::to_string(c.T);
  if (functional.empty()) throw Error(Errc::ParseError, "missing key 'functional'");
  CylFunctional f = CylFunctional::parse(functional);
  CmProcess h = parse_h(c.h, h_dir, spec);
  std::optional<VectorFieldProcess> hfield;
  if (is_free(c.experiment)) hfield = VectorFieldProcess::parse(c.hfield, spec);
  std::optional<WeightFunction> psi;
  if (c.experiment.starts_with("psi")) psi = WeightFunction::parse(c.psi);
  return {std::move(system), PointOnM{x}, v0, h_dir, std::move(f), std::move(h), std::move(hfield), std::move(psi)};
}

void check_range(bool ok, const std::string& message) {
  if (!ok) throw Error(Errc::RangeError, message);
}

using Warnings = std::vector<std::pair<std::string, std::string>>;  // (key, message)

double snap(double value, const TimeGrid& grid, const char* key, Warnings& warnings) {
  const double scaled = value / grid.dt();
  const double snapped = grid.time(static_cast<int>(std::llround(scaled)));
  if (std::abs(snapped - value) > 1e-12) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.15g is off-grid; snapped to %.17g", key, value, snapped);
    warnings.emplace_back(key, buf);
  }
  return snapped;
}

/// Range checks, name resolution and grid snapping for one table.
void validate(ExperimentConfig& c, Warnings& warnings) {
  if (c.experiment.empty()) throw Error(Errc::ParseError, "missing key 'experiment'");
  if (!find_experiment(c.experiment)) throw Error(Errc::UnknownName, "unknown experiment '" + c.experiment + "'");
  if (c.system.empty()) throw Error(Errc::ParseError, "missing key 'system'");
  check_range(c.T > 0.0 && c.T <= 100.0, "T must lie in (0, 100]");
  check_range(c.steps_per_unit >= 1 && c.steps_per_unit <= 1000000, "steps_per_unit must lie in [1, 1e6]");
  if (!c.n_paths) c.n_paths = default_paths(c.experiment);
  check_range(*c.n_paths >= 2, "n_paths must be >= 2");
  check_range(c.n_base_points >= 2, "n_base_points must be >= 2");
  check_range(std::abs(c.tau) <= 0.5, "|tau| must be <= 0.5");
  check_range(c.z_threshold > 0.0 && c.se_mult >= 0.0 && c.rel_tol >= 0.0 && c.abs_tol >= 0.0,
              "tolerances must be non-negative");
  if (c.experiment == "crn_fd_gradient" || c.experiment == "fd_vs_bismut") {
    check_range(c.eps >= 1e-4 && c.eps <= 1e-1, "eps must lie in [1e-4, 1e-1]");
  } else if (is_girsanov(c.experiment)) {
    check_range(c.eps > 0.0 && c.eps <= 0.5, "eps must lie in (0, 0.5]");
  }
  parse_format(c.format);
  if (find_experiment(c.experiment)->kind == RowKind::Oracle && !c.expected) {
    throw Error(Errc::ParseError, "oracle experiment needs key 'expected'");
  }

  const Setup s = build(c);
  const TimeGrid grid(c.T, c.steps_per_unit);
  for (double t : s.f.times()) check_range(t >= 0.0 && t <= c.T + 1e-12, "functional time outside [0, T]");
  const bool endpoint_function = (uses_gradient_direction(c.experiment) && !is_girsanov(c.experiment)) ||
                                 c.experiment == "function_ibp_check" || c.experiment == "lemma21_integrated_check";
  if (endpoint_function) {
    check_range(s.f.arity() == 1 && std::abs(s.f.times()[0] - c.T) <= 1e-12,
                "function experiments evaluate f at T; write the functional as '<name>@T'");
  }
  std::vector<double> snapped_times;
  for (double t : s.f.times()) snapped_times.push_back(snap(t, grid, "functional", warnings));
  c.functional = s.f.with_times(snapped_times).name();
  if (c.t) c.t = snap(*c.t, grid, "t", warnings);
  if (c.r) c.r = snap(*c.r, grid, "r", warnings);
  if (c.width) c.width = snap(*c.width, grid, "width", warnings);
  if (uses_gradient_direction(c.experiment) && !is_girsanov(c.experiment)) {
    const Vec v = s.v0 - tangent_projector(s.system.manifold(), s.x.coords) * s.v0;
    check_range(v.norm() <= 1e-8, "v0 is not tangent at x0");
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ResultRow row_from(const IbpReport& r, const ExperimentConfig& c) {
  ResultRow row;
  row.lhs = r.lhs;
  row.lhs_se = r.lhs_se;
  row.rhs = r.rhs;
  row.rhs_se = r.rhs_se;
  row.diff = r.diff;
  row.diff_se = r.diff_se;
  row.z = r.z;
  const bool identity_ok = std::abs(r.diff) <= c.z_threshold * r.diff_se + c.abs_tol;
  const bool lhs_ok = !c.expected_lhs || std::abs(r.lhs - *c.expected_lhs) <= c.z_threshold * r.lhs_se + c.abs_tol;
  row.status = identity_ok && lhs_ok ? "pass" : "fail";
  return row;
}

ResultRow row_from(const GradientEstimate& g, const ExperimentConfig& c) {
  ResultRow row;
  const double expected = *c.expected;
  row.lhs = g.value;
  row.lhs_se = g.std_error;
  row.rhs = expected;
  row.rhs_se = 0.0;
  row.diff = g.value - expected;
  row.diff_se = g.std_error;
  row.z = g.std_error > 0.0 ? std::abs(row.diff) / g.std_error : (row.diff == 0.0 ? 0.0 : INFINITY);
  const double allowance = std::max(c.se_mult * g.std_error, c.rel_tol * std::abs(expected)) + c.abs_tol;
  row.status = std::abs(row.diff) <= allowance ? "pass" : "fail";
  return row;
}

}  // namespace

const std::vector<ExperimentInfo>& registry() { return kRegistry; }

const ExperimentInfo* find_experiment(std::string_view name) {
  for (const auto& e : kRegistry) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

static std::string message_of(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.starts_with(prefix) ? what.substr(prefix.size()) : what;
}

std::string to_string(const Diagnostic& d) {
  return "line " + std::to_string(d.line) + ": " + std::string(to_string(d.code)) + ": " + d.message;
}

ParseResult parse_config(std::string_view text, const ParseOptions& opts) {
  ParseResult out;
  std::vector<std::map<std::string, int>> key_lines;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[[experiment]]") {
        ExperimentConfig c;
        c.line = line_no;
        c.seed = opts.default_seed;
        out.configs.push_back(std::move(c));
        key_lines.emplace_back();
      } else {
        out.errors.push_back({line_no, Errc::ParseError, "unknown table header '" + line + "'"});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back({line_no, Errc::ParseError, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (value.find('"') != std::string::npos) {
      out.errors.push_back({line_no, Errc::ParseError, "unterminated string"});
      continue;
    }
    if (out.configs.empty()) {
      out.errors.push_back({line_no, Errc::ParseError, "key outside an [[experiment]] table"});
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) {
      out.errors.push_back({line_no, Errc::UnknownName, "unknown key '" + key + "'"});
      continue;
    }
    auto& lines = key_lines.back();
    if (lines.contains(key)) {
      out.errors.push_back({line_no, Errc::ParseError, "duplicate key '" + key + "'"});
      continue;
    }
    lines[key] = line_no;
    try {
      it->second(out.configs.back(), value);
    } catch (const Error& e) {
      out.errors.push_back({line_no, e.code(), message_of(e)});
    }
  }

  for (std::size_t i = 0; i < out.configs.size(); ++i) {
    ExperimentConfig& c = out.configs[i];
    const auto& lines = key_lines[i];
    auto line_of = [&](const char* key) {
      const auto it = lines.find(key);
      return it == lines.end() ? c.line : it->second;
    };
    Warnings warnings;
    try {
      validate(c, warnings);
    } catch (const Error& e) {
      // Point at the most specific key we can.
      int at = c.line;
      const std::string msg = message_of(e);
      for (const char* key : {"experiment", "system", "manifold", "functional", "h", "hfield", "psi", "x0", "v0",
                              "h_dir", "T", "tau", "eps", "n_paths", "steps_per_unit", "format"}) {
        if (msg.find(key) != std::string::npos && lines.contains(key)) {
          at = line_of(key);
          break;
        }
      }
      if (e.code() == Errc::UnknownName && msg.find("experiment") != std::string::npos) at = line_of("experiment");
      out.errors.push_back({at, e.code(), msg});
    }
    for (auto& [key, msg] : warnings) out.warnings.push_back({line_of(key.c_str()), Errc::GridMismatch, std::move(msg)});
  }
  return out;
}

ResultRow run_experiment(const ExperimentConfig& c, const RunOptions& run) {
  const Setup s = build(c);
  McConfig mc;
  mc.n_paths = *c.n_paths;
  mc.steps_per_unit = c.steps_per_unit;
  mc.seed = c.seed;
  mc.run = run;
  mc.debug_rhs_scale = c.debug_rhs_scale;
  const TangentVec v0{s.x.coords, s.v0};
  const double T = c.T;
  const double r = c.r.value_or(T / 2.0);
  const double width = c.width.value_or(T - r);
  const std::string& e = c.experiment;

  ResultRow row;
  if (e == "bismut_gradient") {
    row = row_from(bismut_gradient(s.system, s.x, v0, s.f, T, mc), c);
  } else if (e == "thalmaier_gradient") {
    row = row_from(thalmaier_gradient(s.system, s.x, v0, s.f, T, r, width, mc), c);
  } else if (e == "psi_weighted_gradient") {
    row = row_from(psi_weighted_gradient(s.system, s.x, v0, s.f, T, *s.psi, mc), c);
  } else if (e == "crn_fd_gradient") {
    row = row_from(crn_fd_gradient(s.system, s.x, v0, s.f, T, c.eps, mc), c);
  } else if (e == "thalmaier_vs_bismut") {
    row = row_from(compare_gradients(s.system, s.x, v0, s.f, T, GradientMethod::thalmaier(r, width),
                                     GradientMethod::bismut(), mc), c);
  } else if (e == "psi_vs_bismut") {
    row = row_from(compare_gradients(s.system, s.x, v0, s.f, T, GradientMethod::psi_weighted(*s.psi),
                                     GradientMethod::bismut(), mc), c);
  } else if (e == "fd_vs_bismut") {
    row = row_from(compare_gradients(s.system, s.x, v0, s.f, T, GradientMethod::finite_difference(c.eps),
                                     GradientMethod::bismut(), mc), c);
  } else if (e == "lemma21_integrated_check") {
    row = row_from(lemma21_integrated_check(s.system, s.x, s.f, s.h, c.t.value_or(T), T, mc), c);
  } else if (e == "function_ibp_check") {
    row = row_from(function_ibp_check(s.system, s.x, s.f, s.h, T, mc), c);
  } else if (e == "pathspace_ibp") {
    row = row_from(pathspace_ibp(s.system, s.x, s.f, s.h, T, mc), c);
  } else if (e == "damped_ibp") {
    row = row_from(damped_ibp(s.system, s.x, s.f, s.h, T, mc), c);
  } else if (e == "girsanov_invariance") {
    row = row_from(girsanov_invariance(s.system, s.x, s.f, s.h, c.tau, T, mc), c);
  } else if (e == "girsanov_martingale") {
    row = row_from(girsanov_martingale(s.system, s.x, s.h, c.tau, T, mc), c);
  } else if (is_girsanov(e)) {
    const auto rep = girsanov_derivative(s.system, s.x, s.f, s.h, T, mc, c.eps);
    if (e == "girsanov_derivative") row = row_from(rep.direct, c);
    else if (e == "girsanov_derivative_fd") row = row_from(rep.fd, c);
    else row = row_from(rep.fd_vs_direct, c);
  } else if (e == "free_ibp") {
    row = row_from(free_ibp(s.system, s.f, *s.hfield, T, c.n_base_points, mc), c);
  } else if (e == "free_damped_ibp") {
    row = row_from(free_damped_ibp(s.system, s.f, *s.hfield, T, c.n_base_points, mc), c);
  } else {
    throw Error(Errc::UnknownName, "unknown experiment '" + e + "'");
  }

  row.experiment = e;
  row.manifold = s.system.manifold().name();
  row.system = s.system.name();
  row.functional = s.f.name();
  row.h = is_free(e) ? c.hfield : c.h;
  row.T = T;
  row.n = is_free(e) ? c.n_base_points * mc.n_paths : mc.n_paths;
  row.m = TimeGrid(T, c.steps_per_unit).steps();
  row.seed = c.seed;
  return row;
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const SuiteOptions& opts) {
  SuiteResult out;
  for (const auto& c : configs) {
    const auto start = std::chrono::steady_clock::now();
    try {
      ResultRow row = run_experiment(c, opts.run);
      const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
      row.wall_ms = opts.record_timing ? elapsed.count() : 0.0;
      if (row.status != "pass") out.exit_code = std::max(out.exit_code, 1);
      if (opts.verbose) {
        std::cerr << row.experiment << " [" << row.system << ", " << row.functional << ", " << row.h
                  << "]: z = " << row.z << " -> " << row.status << "\n";
      }
      out.rows.push_back(std::move(row));
    } catch (const Error& e) {
      std::cerr << "line " << c.line << ": " << c.experiment << ": " << e.what() << "\n";
      const bool numeric = e.code() == Errc::NumericBlowup || e.code() == Errc::NonFiniteSample;
      out.exit_code = std::max(out.exit_code, numeric ? 1 : 2);
    }
  }
  return out;
}

ReportFormat parse_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  throw Error(Errc::UnknownName, "unknown format '" + std::string(text) + "' (csv | json)");
}

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Json) {
    // Numbers are emitted as shortest round-trip decimals, so parsing the JSON
    // recovers exactly the doubles printed in the CSV.
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back({{"experiment", r.experiment}, {"manifold", r.manifold}, {"system", r.system},
                     {"functional", r.functional}, {"h", r.h}, {"T", r.T}, {"n", r.n}, {"m", r.m},
                     {"seed", r.seed}, {"lhs", r.lhs}, {"lhs_se", r.lhs_se}, {"rhs", r.rhs},
                     {"rhs_se", r.rhs_se}, {"diff", r.diff}, {"diff_se", r.diff_se}, {"z", r.z},
                     {"status", r.status}, {"wall_ms", r.wall_ms}});
    }
    return arr.dump(2) + "\n";
  }
  std::string s = "experiment,manifold,system,functional,h,T,n,m,seed,lhs,lhs_se,rhs,rhs_se,diff,diff_se,z,status,wall_ms\n";
  auto quote = [](const std::string& v) {
    return v.find_first_of(",\"") == std::string::npos ? v : "\"" + v + "\"";
  };
  for (const auto& r : rows) {
    s += r.experiment + "," + r.manifold + "," + r.system + "," + quote(r.functional) + "," + quote(r.h) + "," +
         fmt17(r.T) + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," + std::to_string(r.seed) + "," +
         fmt17(r.lhs) + "," + fmt17(r.lhs_se) + "," + fmt17(r.rhs) + "," + fmt17(r.rhs_se) + "," +
         fmt17(r.diff) + "," + fmt17(r.diff_se) + "," + fmt17(r.z) + "," + r.status + "," + fmt17(r.wall_ms) + "\n";
  }
  return s;
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::string& path) {
  const std::string text = format_report(rows, format);
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw Error(Errc::IoError, "cannot write to stdout");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  f << text;
  if (!f.flush()) throw Error(Errc::IoError, "write to '" + path + "' failed");
}

}  // namespace ibplab::cli
