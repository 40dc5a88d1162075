#include "ibplab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ibplab/error.hpp"

namespace ibplab {

namespace {

Vec project_point(const ManifoldSpec& spec, const Vec& p) {
  if (spec.kind() == ManifoldKind::Euclidean) return p;
  const double n = p.norm();
  if (n < 1e-300) throw Error(Errc::ZeroVector, "flow left the manifold through the origin");
  return p / n;
}

struct HeunStage {
  Vec predictor;
  Vec pushed;  // X(x) ΔB at the left point
  Vec next;
  double predictor_scale = 1.0;  // 1/|y| of the projected predictor
  double next_scale = 1.0;
};

double inverse_norm(const ManifoldSpec& spec, const Vec& p) {
  return spec.kind() == ManifoldKind::Euclidean ? 1.0 : 1.0 / p.norm();
}

// Shared by every point integrator so that flows started from the same point
// on the same draw agree bit for bit.
HeunStage heun_point_step(const SdeSystem& system, const Vec& x, const Vec& db, double dt) {
  const ManifoldSpec& spec = system.manifold();
  HeunStage s;
  s.pushed = system.apply_diffusion(x, db);
  const Vec a = system.drift(x);
  const Vec y = x + s.pushed + a * dt;
  s.predictor = project_point(spec, y);
  s.predictor_scale = inverse_norm(spec, y);
  const Vec pushed_p = system.apply_diffusion(s.predictor, db);
  const Vec ap = system.drift(s.predictor);
  const Vec y_next = x + 0.5 * (s.pushed + pushed_p) + 0.5 * (a + ap) * dt;
  s.next = project_point(spec, y_next);
  s.next_scale = inverse_norm(spec, y_next);
  return s;
}

// -1/2 Ric + ∇Z expressed in the orthonormal frame (zero padded).
Mat damping_coefficient(const SdeSystem& system, const Vec& x, const Mat& frame) {
  const Mat op = -0.5 * ricci_matrix(system.manifold(), x) + system.generator_drift_jacobian(x);
  return frame.transpose() * op * frame;
}

void check_blowup(const Vec& x, const Mat* d) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowupLimit) {
    throw Error(Errc::NumericBlowup, "flow point exceeded 1e12");
  }
  if (d && (!d->allFinite() || d->cwiseAbs().maxCoeff() > kBlowupLimit)) {
    throw Error(Errc::NumericBlowup, "derivative flow exceeded 1e12");
  }
}

}  // namespace

TimeGrid::TimeGrid(double horizon, int steps_per_unit, std::span<const double> marked,
                   std::vector<std::string>* warnings)
    : horizon_(horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(Errc::RangeError, "horizon T must be > 0");
  if (steps_per_unit < 1) throw Error(Errc::RangeError, "steps_per_unit must be >= 1");
  steps_ = std::max(1, static_cast<int>(std::llround(horizon * steps_per_unit)));
  dt_ = horizon / steps_;
  for (double t : marked) {
    if (t < 0.0 || t > horizon + 1e-12) {
      throw Error(Errc::RangeError, "marked time " + std::to_string(t) + " outside [0, T]");
    }
    const int k = std::clamp(static_cast<int>(std::llround(t / dt_)), 0, steps_);
    if (std::abs(time(k) - t) > 1e-12 && warnings) {
      warnings->push_back("time " + std::to_string(t) + " snapped to grid node " + std::to_string(time(k)));
    }
    marked_.push_back(k);
  }
  std::sort(marked_.begin(), marked_.end());
  marked_.erase(std::unique(marked_.begin(), marked_.end()), marked_.end());
}

double TimeGrid::time(int k) const noexcept { return k >= steps_ ? horizon_ : k * dt_; }

int TimeGrid::index_of(double t) const {
  const long long k = std::llround(t / dt_);
  if (k < 0 || k > steps_ || std::abs(time(static_cast<int>(k)) - t) > 1e-9) {
    throw Error(Errc::GridMismatch, "time " + std::to_string(t) + " is not a grid node");
  }
  return static_cast<int>(k);
}

void BrownianDraw::resample(const RngPolicy& rng, std::uint64_t path, const TimeGrid& grid,
                            int noise_dim) {
  auto gen = rng.stream(path, StreamPurpose::Increments);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(grid.dt());
  increments.resize(static_cast<std::size_t>(grid.steps()));
  for (auto& inc : increments) {
    inc.setZero();
    for (int i = 0; i < noise_dim; ++i) inc[i] = sd * normal(gen);
  }
}

BrownianDraw BrownianDraw::sample(const RngPolicy& rng, std::uint64_t path, const TimeGrid& grid,
                                  int noise_dim) {
  BrownianDraw d;
  d.resample(rng, path, grid, noise_dim);
  return d;
}

int FlowPath::local(int grid_index) const {
  const int k = grid_index - first_node;
  if (k < 0 || k >= static_cast<int>(points.size())) {
    throw Error(Errc::GridMismatch, "node " + std::to_string(grid_index) + " not on this path");
  }
  return k;
}

Mat FlowPath::transport(int local_index) const {
  return frames.at(static_cast<std::size_t>(local_index)) * frames.front().transpose();
}

void simulate_flow(const SdeSystem& system, const PointOnM& x0, const TimeGrid& grid,
                   const BrownianDraw& draw, const FlowOptions& opts, FlowPath& out, int first_node) {
  const ManifoldSpec& spec = system.manifold();
  if (!spec.contains(x0.coords)) throw Error(Errc::InvalidArgument, "start point is not on " + spec.name());
  if (static_cast<int>(draw.increments.size()) != grid.steps()) {
    throw Error(Errc::GridMismatch, "draw length differs from grid step count");
  }
  if (first_node < 0 || first_node > grid.steps()) throw Error(Errc::GridMismatch, "restart node outside grid");

  const bool transports = opts.transports || opts.damped;
  const auto n_nodes = static_cast<std::size_t>(grid.steps() - first_node + 1);
  const double dt = grid.dt();

  out.first_node = first_node;
  out.points.resize(n_nodes);
  out.increments.resize(n_nodes - 1);
  out.pushed_noise.resize(n_nodes - 1);
  out.deriv.resize(opts.derivative ? n_nodes : 0);
  out.frames.resize(transports ? n_nodes : 0);
  out.antidev.resize(transports ? n_nodes - 1 : 0);
  out.damped.resize(opts.damped ? n_nodes : 0);

  Vec x = x0.coords;
  out.points[0] = x;
  Mat d = tangent_projector(spec, x);
  if (opts.derivative) out.deriv[0] = d;

  Mat frame0;
  Mat w = Mat::Identity();
  Mat coeff;
  if (transports) {
    frame0 = tangent_frame(spec, x);
    out.frames[0] = frame0;
  }
  if (opts.damped) {
    coeff = damping_coefficient(system, x, frame0);
    out.damped[0] = frame0 * frame0.transpose();
  }

  for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
    const Vec& db = draw.increments[static_cast<std::size_t>(first_node) + k];
    const HeunStage step = heun_point_step(system, x, db, dt);
    out.increments[k] = db;
    out.pushed_noise[k] = step.pushed;

    if (opts.derivative) {
      const Mat j = system.diffusion_jacobian(x, db) + system.drift_jacobian(x) * dt;
      const Mat jd = j * d;
      // Exact derivative of the discrete step, including the projection y -> y/|y|.
      const Mat dp = step.predictor_scale * tangent_projector(spec, step.predictor) * (d + jd);
      const Mat jp = system.diffusion_jacobian(step.predictor, db) + system.drift_jacobian(step.predictor) * dt;
      d = step.next_scale * tangent_projector(spec, step.next) * (d + 0.5 * (jd + jp * dp));
      out.deriv[k + 1] = d;
    }
    check_blowup(step.next, opts.derivative ? &d : nullptr);

    if (transports) {
      out.antidev[k] = out.frames[k].transpose() * step.pushed;
      out.frames[k + 1] = transport_frame(spec, out.frames[k], x, step.next);
    }
    if (opts.damped) {
      const Mat next_coeff = damping_coefficient(system, step.next, out.frames[k + 1]);
      const Mat half = (0.25 * dt) * (coeff + next_coeff);
      w = (Mat::Identity() - half).inverse() * (Mat::Identity() + half) * w;
      coeff = next_coeff;
      out.damped[k + 1] = out.frames[k + 1] * w * frame0.transpose();
    }
    x = step.next;
    out.points[k + 1] = x;
  }
}

FlowPath simulate_flow(const SdeSystem& system, const PointOnM& x0, const TimeGrid& grid,
                       const BrownianDraw& draw, const FlowOptions& opts) {
  FlowPath path;
  simulate_flow(system, x0, grid, draw, opts, path, 0);
  return path;
}

Vec flow_endpoint(const SdeSystem& system, const Vec& x0, const TimeGrid& grid, const BrownianDraw& draw,
                  int first, int last) {
  if (first < 0 || last > grid.steps() || first > last) throw Error(Errc::GridMismatch, "bad node range");
  if (static_cast<int>(draw.increments.size()) != grid.steps()) {
    throw Error(Errc::GridMismatch, "draw length differs from grid step count");
  }
  Vec x = x0;
  for (int k = first; k < last; ++k) {
    x = heun_point_step(system, x, draw.increments[static_cast<std::size_t>(k)], grid.dt()).next;
    check_blowup(x, nullptr);
  }
  return x;
}

FlowPath restart_flow(const SdeSystem& system, const PointOnM& x_at_r, const TimeGrid& grid,
                      const BrownianDraw& draw, int r, const FlowOptions& opts) {
  FlowPath path;
  simulate_flow(system, x_at_r, grid, draw, opts, path, r);
  return path;
}

std::vector<Vec> antidevelopment_increments(const FlowPath& path, const SdeSystem& system) {
  if (!path.antidev.empty()) return path.antidev;
  const ManifoldSpec& spec = system.manifold();
  std::vector<Vec> out(path.pushed_noise.size());
  Mat frame = tangent_frame(spec, path.points.front());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = frame.transpose() * path.pushed_noise[k];
    frame = transport_frame(spec, frame, path.points[k], path.points[k + 1]);
  }
  return out;
}

std::vector<TangentVec> damped_transport(const FlowPath& path, const TangentVec& v0) {
  if (path.damped.empty()) throw Error(Errc::InvalidArgument, "path was simulated without damped transport");
  std::vector<TangentVec> out;
  out.reserve(path.damped.size());
  for (std::size_t k = 0; k < path.damped.size(); ++k) {
    out.push_back({path.points[k], path.damped[k] * v0.coords});
  }
  return out;
}

PointOnM variation_flow(const SdeSystem& system, const Vec& h_value, double tau, const PointOnM& x) {
  if (std::abs(tau) > 10.0) throw Error(Errc::RangeError, "|tau| must be <= 10");
  const int n = static_cast<int>(std::ceil(std::abs(tau) * 64.0));
  if (n == 0 || h_value.isZero(0.0)) return x;
  const ManifoldSpec& spec = system.manifold();
  const double step = tau / n;
  auto field = [&](const Vec& y) { return system.apply_diffusion(y, h_value); };
  Vec y = x.coords;
  for (int i = 0; i < n; ++i) {
    const Vec k1 = field(y);
    const Vec k2 = field(y + 0.5 * step * k1);
    const Vec k3 = field(y + 0.5 * step * k2);
    const Vec k4 = field(y + step * k3);
    y = project_point(spec, y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  return {y};
}

VariationSeries variation_series(const SdeSystem& system, std::span<const Vec> h_nodes, double tau,
                                 const PointOnM& x, const TimeGrid& grid) {
  const int m = grid.steps();
  if (static_cast<int>(h_nodes.size()) != m + 1) throw Error(Errc::GridMismatch, "h must be given at every node");
  VariationSeries s;
  s.points.resize(h_nodes.size());
  s.time_derivative.resize(h_nodes.size());
  for (std::size_t k = 0; k < h_nodes.size(); ++k) s.points[k] = variation_flow(system, h_nodes[k], tau, x).coords;
  const double dt = grid.dt();
  for (int k = 0; k <= m; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (k == 0) {
      s.time_derivative[i] = (s.points[1] - s.points[0]) / dt;
    } else if (k == m) {
      s.time_derivative[i] = (s.points[i] - s.points[i - 1]) / dt;
    } else {
      s.time_derivative[i] = (s.points[i + 1] - s.points[i - 1]) / (2.0 * dt);
    }
  }
  return s;
}

std::vector<Vec> perturbed_cylinder_points(const SdeSystem& system, const PointOnM& x,
                                           std::span<const Vec> h_nodes, double tau,
                                           std::span<const int> cylinder_nodes, const TimeGrid& grid,
                                           const BrownianDraw& draw) {
  std::vector<Vec> out;
  out.reserve(cylinder_nodes.size());
  for (int node : cylinder_nodes) {
    if (node < 0 || node > grid.steps() || static_cast<std::size_t>(node) >= h_nodes.size()) {
      throw Error(Errc::GridMismatch, "cylinder time not on grid");
    }
    const PointOnM start = variation_flow(system, h_nodes[static_cast<std::size_t>(node)], tau, x);
    out.push_back(flow_endpoint(system, start.coords, grid, draw, 0, node));
  }
  return out;
}

double girsanov_log_density(const FlowPath& path, const SdeSystem& system, const VariationSeries& variation,
                            const TimeGrid& grid) {
  if (path.first_node != 0 || path.deriv.empty()) {
    throw Error(Errc::InvalidArgument, "girsanov density needs a full path with derivative flow");
  }
  if (variation.time_derivative.size() != path.points.size()) {
    throw Error(Errc::GridMismatch, "variation series does not match the path");
  }
  double martingale = 0.0;
  double quad_var = 0.0;
  for (std::size_t k = 0; k + 1 < path.points.size(); ++k) {
    const Vec u = system.apply_diffusion_adjoint(path.points[k], path.deriv[k] * variation.time_derivative[k]);
    martingale += u.dot(path.increments[k]);
    quad_var += u.squaredNorm() * grid.dt();
  }
  return martingale - 0.5 * quad_var;
}

double girsanov_log_density(const FlowPath& path, const SdeSystem& system, std::span<const Vec> h_nodes,
                            double tau, const TimeGrid& grid) {
  const VariationSeries s = variation_series(system, h_nodes, tau, PointOnM{path.points.front()}, grid);
  return girsanov_log_density(path, system, s, grid);
}

}  // namespace ibplab
