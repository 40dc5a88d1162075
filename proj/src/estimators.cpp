#include "ibplab/estimators.hpp"

#include <array>
#include <cmath>
#include <string>

#include "ibplab/error.hpp"

namespace ibplab {

namespace {

struct PathScratch {
  BrownianDraw draw;
  FlowPath path;
  std::vector<CmValue> h;
};

void require_on_manifold(const ManifoldSpec& spec, const PointOnM& x) {
  if (!spec.contains(x.coords)) throw Error(Errc::InvalidArgument, "start point is not on " + spec.name());
}

void require_tangent(const ManifoldSpec& spec, const PointOnM& x, const Vec& v) {
  const Vec normal = v - tangent_projector(spec, x.coords) * v;
  if (normal.norm() > 1e-8 * std::max(1.0, v.norm())) {
    throw Error(Errc::InvalidArgument, "vector is not tangent at the start point");
  }
}

void require_gradient(const SdeSystem& system) {
  if (!system.gradient_system()) {
    throw Error(Errc::NotGradientSystem, system.name() + " does not realize the Levi-Civita connection");
  }
}

void require_single_slot(const CylFunctional& f) {
  if (f.arity() != 1) throw Error(Errc::InvalidArgument, "a function on M (one time slot) is required");
}

double f_at(const CylFunctional& f, const Vec& x) { return f.value(std::span<const Vec>(&x, 1)); }

Vec df_at(const CylFunctional& f, const Vec& x) { return f.gradient(0, std::span<const Vec>(&x, 1)); }

struct BelWeights {
  std::vector<double> weights;
  double norm = 1.0;
};

BelWeights bel_weights(const GradientMethod& method, const TimeGrid& grid) {
  BelWeights w;
  const auto m = static_cast<std::size_t>(grid.steps());
  switch (method.kind) {
    case EstimatorKind::Bismut:
      w.weights.assign(m, 1.0);
      w.norm = grid.horizon();
      break;
    case EstimatorKind::Thalmaier: {
      const double T = grid.horizon();
      if (method.r < 0.0 || !(method.width > 0.0) || method.r + method.width > T + 1e-12) {
        throw Error(Errc::BadWindow, "window [r, r+width] must lie in [0, T] with width > 0");
      }
      try {
        grid.index_of(method.r);
        grid.index_of(std::min(method.r + method.width, T));
      } catch (const Error&) {
        throw Error(Errc::BadWindow, "window endpoints must be grid nodes");
      }
      const WeightFunction window = WeightFunction::window(method.r, method.width);
      w.weights.resize(m);
      for (std::size_t k = 0; k < m; ++k) w.weights[k] = window.value(grid.time(static_cast<int>(k)));
      w.norm = method.width;
      break;
    }
    case EstimatorKind::PsiWeighted: {
      const WeightFunction& psi = *method.psi;
      w.weights.resize(m);
      for (std::size_t k = 0; k < m; ++k) w.weights[k] = psi.value(grid.time(static_cast<int>(k)));
      w.norm = psi.integral(grid);
      if (std::abs(w.norm) < 1e-12) throw Error(Errc::DegenerateWeight, "weight integrates to zero");
      break;
    }
    case EstimatorKind::FiniteDifference:
      break;
  }
  return w;
}

double bel_sample(const FlowPath& path, const Vec& v0, const CylFunctional& f, const BelWeights& w) {
  double integral = 0.0;
  for (std::size_t k = 0; k < path.pushed_noise.size(); ++k) {
    integral += w.weights[k] * (path.deriv[k] * v0).dot(path.pushed_noise[k]);
  }
  return f_at(f, path.points.back()) * integral / w.norm;
}

/// Per-path sampler for one member of the gradient family.
class GradientSampler {
 public:
  GradientSampler(const SdeSystem& system, const PointOnM& x, const TangentVec& v0, const CylFunctional& f,
                  const GradientMethod& method, const TimeGrid& grid)
      : system_(system), x_(x), v0_(v0.coords), f_(f), method_(method), grid_(grid) {
    if (method.kind == EstimatorKind::FiniteDifference) {
      if (method.eps < 1e-4 || method.eps > 1e-1) throw Error(Errc::RangeError, "eps must lie in [1e-4, 1e-1]");
      plus_ = project_to_manifold(system.manifold(), x.coords + method.eps * v0_).coords;
      minus_ = project_to_manifold(system.manifold(), x.coords - method.eps * v0_).coords;
    } else {
      weights_ = bel_weights(method, grid);
    }
  }

  bool needs_path() const { return method_.kind != EstimatorKind::FiniteDifference; }

  double operator()(const FlowPath& path, const BrownianDraw& draw) const {
    if (method_.kind == EstimatorKind::FiniteDifference) {
      const Vec up = flow_endpoint(system_, plus_, grid_, draw, 0, grid_.steps());
      const Vec down = flow_endpoint(system_, minus_, grid_, draw, 0, grid_.steps());
      return (f_at(f_, up) - f_at(f_, down)) / (2.0 * method_.eps);
    }
    return bel_sample(path, v0_, f_, weights_);
  }

 private:
  const SdeSystem& system_;
  PointOnM x_;
  Vec v0_;
  const CylFunctional& f_;
  GradientMethod method_;
  const TimeGrid& grid_;
  BelWeights weights_;
  Vec plus_ = Vec::Zero();
  Vec minus_ = Vec::Zero();
};

std::array<double, 3> paired(double lhs, double rhs) { return {lhs, rhs, lhs - rhs}; }

IbpReport report_of(const Accumulators<3>& acc) { return make_report(acc[0], acc[1], acc[2]); }

}  // namespace

// ------------------------------------------------------------ weights

WeightFunction WeightFunction::constant(double c) {
  return {"const", [c](double) { return c; }, [c](double T) { return c * T; }};
}

WeightFunction WeightFunction::linear() {
  return {"linear", [](double s) { return s; }, [](double T) { return 0.5 * T * T; }};
}

WeightFunction WeightFunction::window(double r, double width) {
  constexpr double tol = 1e-12;
  return {"window",
          [r, width](double s) { return (s >= r - tol && s < r + width - tol) ? 1.0 : 0.0; },
          [width](double) { return width; }};
}

WeightFunction WeightFunction::parse(std::string_view text) {
  if (text == "linear") return linear();
  const auto colon = text.find(':');
  const auto head = text.substr(0, colon);
  const std::string arg(colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1));
  try {
    if (head == "const") return constant(std::stod(arg));
    if (head == "window") {
      const auto comma = arg.find(',');
      if (comma == std::string::npos) throw Error(Errc::ParseError, "window needs '<r>,<width>'");
      return window(std::stod(arg.substr(0, comma)), std::stod(arg.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw Error(Errc::ParseError, "bad weight '" + std::string(text) + "'");
  }
  throw Error(Errc::UnknownName, "unknown weight '" + std::string(text) + "'");
}

double WeightFunction::integral(const TimeGrid& grid) const {
  if (exact_integral) return exact_integral(grid.horizon());
  double sum = 0.0;
  for (int k = 0; k < grid.steps(); ++k) sum += 0.5 * (value(grid.time(k)) + value(grid.time(k + 1)));
  return sum * grid.dt();
}

GradientMethod GradientMethod::bismut() { return {}; }

GradientMethod GradientMethod::thalmaier(double r, double width) {
  GradientMethod m;
  m.kind = EstimatorKind::Thalmaier;
  m.r = r;
  m.width = width;
  return m;
}

GradientMethod GradientMethod::psi_weighted(WeightFunction psi) {
  GradientMethod m;
  m.kind = EstimatorKind::PsiWeighted;
  m.psi = std::move(psi);
  return m;
}

GradientMethod GradientMethod::finite_difference(double eps) {
  GradientMethod m;
  m.kind = EstimatorKind::FiniteDifference;
  m.eps = eps;
  return m;
}

// ------------------------------------------------------- gradient family

GradientEstimate gradient_estimate(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                   const CylFunctional& f, double T, const GradientMethod& method,
                                   const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  require_tangent(system.manifold(), x, v0.coords);
  require_single_slot(f);
  const TimeGrid grid(T, mc.steps_per_unit);
  const RngPolicy rng(mc.seed);
  const GradientSampler sampler(system, x, v0, f, method, grid);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    if (sampler.needs_path()) simulate_flow(system, x, grid, s.draw, opts, s.path);
    return std::array<double, 1>{sampler(s.path, s.draw)};
  };
  const auto acc = run_paths<1, PathScratch>(mc.n_paths, kernel, mc.run);
  return to_estimate(acc[0], method.kind);
}

GradientEstimate bismut_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                 const CylFunctional& f, double T, const McConfig& mc) {
  return gradient_estimate(system, x, v0, f, T, GradientMethod::bismut(), mc);
}

GradientEstimate thalmaier_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                    const CylFunctional& f, double T, double r, double width,
                                    const McConfig& mc) {
  return gradient_estimate(system, x, v0, f, T, GradientMethod::thalmaier(r, width), mc);
}

GradientEstimate psi_weighted_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                       const CylFunctional& f, double T, const WeightFunction& psi,
                                       const McConfig& mc) {
  return gradient_estimate(system, x, v0, f, T, GradientMethod::psi_weighted(psi), mc);
}

GradientEstimate crn_fd_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                 const CylFunctional& f, double T, double eps, const McConfig& mc) {
  return gradient_estimate(system, x, v0, f, T, GradientMethod::finite_difference(eps), mc);
}

IbpReport compare_gradients(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                            const CylFunctional& f, double T, const GradientMethod& a, const GradientMethod& b,
                            const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  require_tangent(system.manifold(), x, v0.coords);
  require_single_slot(f);
  const TimeGrid grid(T, mc.steps_per_unit);
  const RngPolicy rng(mc.seed);
  const GradientSampler sa(system, x, v0, f, a, grid);
  const GradientSampler sb(system, x, v0, f, b, grid);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    if (sa.needs_path() || sb.needs_path()) simulate_flow(system, x, grid, s.draw, opts, s.path);
    return paired(sa(s.path, s.draw), mc.debug_rhs_scale * sb(s.path, s.draw));
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

// ------------------------------------------------- based path space

IbpReport lemma21_integrated_check(const SdeSystem& system, const PointOnM& x, const CylFunctional& f,
                                   const CmProcess& h, double t, double T, const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  require_single_slot(f);
  if (!h.deterministic()) throw Error(Errc::InvalidArgument, "Lemma identity needs a non-random h");
  if (!(t > 0.0) || t > T + 1e-12) throw Error(Errc::BadWindow, "t must lie in (0, T]");
  const TimeGrid grid(T, mc.steps_per_unit);
  int t_node = 0;
  try {
    t_node = grid.index_of(t);
  } catch (const Error&) {
    throw Error(Errc::BadWindow, "t must be a grid node");
  }
  const auto series = h.node_values(grid);
  // Linear h has an exact secant; avoid (t u) / t rounding.
  const Vec secant = h.kind() == CmKind::Linear ? h.direction()
                                                : Vec((h.at_time(grid.time(t_node)).value - h.h0()) / grid.time(t_node));
  std::vector<Vec> rates(static_cast<std::size_t>(t_node));
  for (int k = 0; k < t_node; ++k) rates[static_cast<std::size_t>(k)] = h.at_time(grid.time(k)).rate;

  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
      lhs += (s.path.deriv[k] * rates[k]).dot(s.path.pushed_noise[k]);
      rhs += (s.path.deriv[k] * secant).dot(s.path.pushed_noise[k]);
    }
    const double fx = f_at(f, s.path.points.back());
    return paired(fx * lhs, mc.debug_rhs_scale * fx * rhs);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

IbpReport function_ibp_check(const SdeSystem& system, const PointOnM& x, const CylFunctional& f,
                             const CmProcess& h, double T, const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  require_single_slot(f);
  const TimeGrid grid(T, mc.steps_per_unit);
  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    cm_series(h, s.path, grid, s.h);
    const Vec& xT = s.path.points.back();
    const double lhs = f_at(f, xT) * delta_v_h(s.path, s.h);
    const double rhs = df_at(f, xT).dot(s.path.deriv.back() * (s.h.back().value - s.h.front().value));
    return paired(lhs, mc.debug_rhs_scale * rhs);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

IbpReport pathspace_ibp(const SdeSystem& system, const PointOnM& x, const CylFunctional& F, const CmProcess& h,
                        double T, const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  if (!h.h0().isZero(0.0)) throw Error(Errc::InvalidArgument, "based path space needs h_0 = 0");
  const TimeGrid grid(T, mc.steps_per_unit, F.times());
  const auto nodes = cylinder_nodes(F, grid);
  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    cm_series(h, s.path, grid, s.h);
    std::array<Vec, 2> pts;
    for (std::size_t j = 0; j < nodes.size(); ++j) pts[j] = s.path.point_at(nodes[j]);
    const std::span<const Vec> ps(pts.data(), nodes.size());
    const auto v = v_h_field(s.path, nodes, s.h);
    const double lhs = eval_dF(F, ps, v);
    const double rhs = eval_F(F, ps) * delta_v_h(s.path, s.h);
    return paired(lhs, mc.debug_rhs_scale * rhs);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

IbpReport damped_ibp(const SdeSystem& system, const PointOnM& x, const CylFunctional& F, const CmProcess& h,
                     double T, const McConfig& mc) {
  require_gradient(system);
  require_on_manifold(system.manifold(), x);
  if (!h.h0().isZero(0.0)) throw Error(Errc::InvalidArgument, "based path space needs h_0 = 0");
  const TimeGrid grid(T, mc.steps_per_unit, F.times());
  const auto nodes = cylinder_nodes(F, grid);
  const RngPolicy rng(mc.seed);
  const FlowOptions opts{false, true, true};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    cm_series(h, s.path, grid, s.h);
    std::array<Vec, 2> pts;
    std::array<Vec, 2> v;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const int k = s.path.local(nodes[j]);
      pts[j] = s.path.points[static_cast<std::size_t>(k)];
      v[j] = s.path.damped[static_cast<std::size_t>(k)] * s.h[static_cast<std::size_t>(k)].value;
    }
    const std::span<const Vec> ps(pts.data(), nodes.size());
    double integral = 0.0;
    for (std::size_t k = 0; k < s.path.antidev.size(); ++k) {
      const Vec transported_db = s.path.frames[k] * s.path.antidev[k];
      integral += (s.path.damped[k] * s.h[k].rate).dot(transported_db);
    }
    const double lhs = eval_dF(F, ps, std::span<const Vec>(v.data(), nodes.size()));
    const double rhs = eval_F(F, ps) * integral;
    return paired(lhs, mc.debug_rhs_scale * rhs);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

// ------------------------------------------------------------ Girsanov

IbpReport girsanov_invariance(const SdeSystem& system, const PointOnM& x, const CylFunctional& F,
                              const CmProcess& h, double tau, double T, const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  if (!h.deterministic()) throw Error(Errc::InvalidArgument, "variation flow needs a non-random h");
  if (std::abs(tau) > 0.5) throw Error(Errc::RangeError, "|tau| must be <= 0.5");
  const TimeGrid grid(T, mc.steps_per_unit, F.times());
  const auto nodes = cylinder_nodes(F, grid);
  const auto h_nodes = h.node_values(grid);
  const VariationSeries variation = variation_series(system, h_nodes, tau, x, grid);
  std::vector<Vec> starts;
  for (int node : nodes) starts.push_back(variation_flow(system, h_nodes[static_cast<std::size_t>(node)], tau, x).coords);

  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    std::array<Vec, 2> base;
    std::array<Vec, 2> moved;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      base[j] = s.path.point_at(nodes[j]);
      moved[j] = flow_endpoint(system, starts[j], grid, s.draw, 0, nodes[j]);
    }
    const double log_density = girsanov_log_density(s.path, system, variation, grid);
    const double lhs = eval_F(F, std::span<const Vec>(moved.data(), nodes.size()));
    const double rhs = eval_F(F, std::span<const Vec>(base.data(), nodes.size())) * std::exp(log_density);
    return paired(lhs, mc.debug_rhs_scale * rhs);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

IbpReport girsanov_martingale(const SdeSystem& system, const PointOnM& x, const CmProcess& h, double tau,
                              double T, const McConfig& mc) {
  require_on_manifold(system.manifold(), x);
  if (!h.deterministic()) throw Error(Errc::InvalidArgument, "variation flow needs a non-random h");
  const TimeGrid grid(T, mc.steps_per_unit);
  const VariationSeries variation = variation_series(system, h.node_values(grid), tau, x, grid);
  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    return paired(std::exp(girsanov_log_density(s.path, system, variation, grid)), mc.debug_rhs_scale);
  };
  return report_of(run_paths<3, PathScratch>(mc.n_paths, kernel, mc.run));
}

GirsanovDerivativeReport girsanov_derivative(const SdeSystem& system, const PointOnM& x, const CylFunctional& F,
                                             const CmProcess& h, double T, const McConfig& mc, double eps) {
  require_on_manifold(system.manifold(), x);
  if (!h.deterministic()) throw Error(Errc::InvalidArgument, "variation flow needs a non-random h");
  if (!h.h0().isZero(0.0)) throw Error(Errc::InvalidArgument, "variation flow needs h_0 = 0");
  if (!(eps > 0.0) || eps > 0.5) throw Error(Errc::RangeError, "eps must lie in (0, 0.5]");
  const TimeGrid grid(T, mc.steps_per_unit, F.times());
  const auto nodes = cylinder_nodes(F, grid);
  const Mat x_diffusion = system.diffusion(x.coords);
  std::vector<Vec> pushed_h;
  std::vector<Vec> pushed_rate;
  for (int k = 0; k <= grid.steps(); ++k) {
    const CmValue hv = h.at_time(grid.time(k));
    pushed_h.push_back(x_diffusion * hv.value);
    pushed_rate.push_back(x_diffusion * hv.rate);
  }
  const auto h_nodes = h.node_values(grid);
  std::vector<Vec> plus;
  std::vector<Vec> minus;
  for (int node : nodes) {
    plus.push_back(variation_flow(system, h_nodes[static_cast<std::size_t>(node)], eps, x).coords);
    minus.push_back(variation_flow(system, h_nodes[static_cast<std::size_t>(node)], -eps, x).coords);
  }

  const RngPolicy rng(mc.seed);
  const FlowOptions opts{true, false, false};
  auto kernel = [&](std::size_t i, PathScratch& s) {
    s.draw.resample(rng, i, grid, system.noise_dim());
    simulate_flow(system, x, grid, s.draw, opts, s.path);
    std::array<Vec, 2> pts, v, up, down;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      pts[j] = s.path.point_at(nodes[j]);
      v[j] = s.path.deriv_at(nodes[j]) * pushed_h[static_cast<std::size_t>(nodes[j])];
      up[j] = flow_endpoint(system, plus[j], grid, s.draw, 0, nodes[j]);
      down[j] = flow_endpoint(system, minus[j], grid, s.draw, 0, nodes[j]);
    }
    const std::size_t n = nodes.size();
    double integral = 0.0;
    for (std::size_t k = 0; k < s.path.pushed_noise.size(); ++k) {
      integral += s.path.pushed_noise[k].dot(s.path.deriv[k] * pushed_rate[k]);
    }
    const double direct = eval_dF(F, std::span<const Vec>(pts.data(), n), std::span<const Vec>(v.data(), n));
    const double fd = (eval_F(F, std::span<const Vec>(up.data(), n)) - eval_F(F, std::span<const Vec>(down.data(), n))) /
                      (2.0 * eps);
    const double rhs = mc.debug_rhs_scale * eval_F(F, std::span<const Vec>(pts.data(), n)) * integral;
    return std::array<double, 6>{direct, fd, rhs, direct - rhs, fd - rhs, fd - direct};
  };
  const auto acc = run_paths<6, PathScratch>(mc.n_paths, kernel, mc.run);
  return {make_report(acc[0], acc[2], acc[3]), make_report(acc[1], acc[2], acc[4]),
          make_report(acc[1], acc[0], acc[5])};
}

// ---------------------------------------------------- free path space

namespace {

IbpReport free_path_space(const SdeSystem& system, const CylFunctional& F, const VectorFieldProcess& hfield,
                          double T, std::size_t n_base_points, const McConfig& mc, bool damped) {
  const ManifoldSpec& spec = system.manifold();
  const double volume = riemannian_volume(spec);
  if (damped) require_gradient(system);
  const TimeGrid grid(T, mc.steps_per_unit, F.times());
  const auto nodes = cylinder_nodes(F, grid);
  const RngPolicy rng(mc.seed);
  const FlowOptions opts{!damped, damped, damped};
  const std::size_t per_point = mc.n_paths;

  auto unit = [&](std::size_t b, PathScratch& s) {
    auto base_rng = rng.stream(b, StreamPurpose::BasePoint);
    const PointOnM x = uniform_sample(spec, base_rng);
    const DivergenceMode mode = hfield.initial.divergence ? DivergenceMode::Analytic : DivergenceMode::Numeric;
    const double div0 = divergence(spec, hfield.initial, x, mode);
    std::vector<Vec> rates(static_cast<std::size_t>(grid.steps()));
    for (int k = 0; k < grid.steps(); ++k) rates[static_cast<std::size_t>(k)] = hfield.rate(grid.time(k), x.coords);
    std::array<Vec, 2> values;
    for (std::size_t j = 0; j < nodes.size(); ++j) values[j] = hfield.value(grid.time(nodes[j]), x.coords);

    McAccumulator lhs_acc, rhs_acc, diff_acc;
    for (std::size_t p = 0; p < per_point; ++p) {
      s.draw.resample(rng, b * per_point + p, grid, system.noise_dim());
      simulate_flow(system, x, grid, s.draw, opts, s.path);
      const std::vector<Mat>& maps = damped ? s.path.damped : s.path.deriv;
      std::array<Vec, 2> pts, v;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const auto k = static_cast<std::size_t>(s.path.local(nodes[j]));
        pts[j] = s.path.points[k];
        v[j] = maps[k] * values[j];
      }
      double integral = 0.0;
      for (std::size_t k = 0; k < rates.size(); ++k) {
        const Vec noise = damped ? Vec(s.path.frames[k] * s.path.antidev[k]) : s.path.pushed_noise[k];
        integral += (maps[k] * rates[k]).dot(noise);
      }
      const std::size_t n = nodes.size();
      const double lhs = volume * eval_dF(F, std::span<const Vec>(pts.data(), n), std::span<const Vec>(v.data(), n));
      const double rhs =
          mc.debug_rhs_scale * volume * eval_F(F, std::span<const Vec>(pts.data(), n)) * (-div0 + integral);
      lhs_acc.add(lhs);
      rhs_acc.add(rhs);
      diff_acc.add(lhs - rhs);
    }
    return std::array<double, 3>{lhs_acc.mean(), rhs_acc.mean(), diff_acc.mean()};
  };
  IbpReport r = report_of(run_paths<3, PathScratch>(n_base_points, unit, mc.run));
  r.n_paths = n_base_points * per_point;
  return r;
}

}  // namespace

IbpReport free_ibp(const SdeSystem& system, const CylFunctional& F, const VectorFieldProcess& hfield, double T,
                   std::size_t n_base_points, const McConfig& mc) {
  return free_path_space(system, F, hfield, T, n_base_points, mc, false);
}

IbpReport free_damped_ibp(const SdeSystem& system, const CylFunctional& F, const VectorFieldProcess& hfield,
                          double T, std::size_t n_base_points, const McConfig& mc) {
  return free_path_space(system, F, hfield, T, n_base_points, mc, true);
}

}  // namespace ibplab
