#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ibplab/geometry.hpp"
#include "ibplab/rng.hpp"
#include "ibplab/system.hpp"

namespace ibplab {

/// Uniform grid on [0, T] with m = round(T * steps_per_unit) steps. Marked
/// times are snapped onto their nearest node.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps_per_unit, std::span<const double> marked = {},
           std::vector<std::string>* warnings = nullptr);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double time(int k) const noexcept;
  /// Node index of t; throws GridMismatch when t is off-grid by more than 1e-9.
  int index_of(double t) const;
  const std::vector<int>& marked() const noexcept { return marked_; }

 private:
  double horizon_;
  int steps_;
  double dt_;
  std::vector<int> marked_;
};

/// Brownian increments for one path: increments[k] ~ N(0, dt I_n), zero past noise_dim.
struct BrownianDraw {
  std::vector<Vec> increments;

  void resample(const RngPolicy& rng, std::uint64_t path, const TimeGrid& grid, int noise_dim);
  static BrownianDraw sample(const RngPolicy& rng, std::uint64_t path, const TimeGrid& grid,
                             int noise_dim);
};

struct FlowOptions {
  bool derivative = true;
  /// Parallel frames and antidevelopment increments.
  bool transports = false;
  /// Damped transport W (implies transports).
  bool damped = false;
};

/// One discretized realization on grid nodes first_node..m. Vectors are
/// indexed by local node k = grid index - first_node.
struct FlowPath {
  int first_node = 0;
  std::vector<Vec> points;
  std::vector<Vec> increments;     // ΔB per step (size points-1)
  std::vector<Vec> pushed_noise;   // X(x_k) ΔB_k
  std::vector<Mat> deriv;          // Tξ at each node, acting on T_{x_0}M
  std::vector<Mat> frames;         // transported orthonormal frames
  std::vector<Vec> antidev;        // ΔB~_k in frame coordinates of T_{x_0}M
  std::vector<Mat> damped;         // W at each node, acting on T_{x_0}M

  int last_node() const noexcept { return first_node + static_cast<int>(points.size()) - 1; }
  int local(int grid_index) const;
  const Vec& point_at(int grid_index) const { return points[static_cast<std::size_t>(local(grid_index))]; }
  const Mat& deriv_at(int grid_index) const { return deriv[static_cast<std::size_t>(local(grid_index))]; }
  const Mat& damped_at(int grid_index) const { return damped[static_cast<std::size_t>(local(grid_index))]; }
  /// Parallel transport T_{x_0}M -> T_{x_k}M as an ambient matrix.
  Mat transport(int local_index) const;
};

inline constexpr double kBlowupLimit = 1e12;

/// Stratonovich Heun with post-step projection; fills the requested extras.
void simulate_flow(const SdeSystem& system, const PointOnM& x0, const TimeGrid& grid,
                   const BrownianDraw& draw, const FlowOptions& opts, FlowPath& out,
                   int first_node = 0);
FlowPath simulate_flow(const SdeSystem& system, const PointOnM& x0, const TimeGrid& grid,
                       const BrownianDraw& draw, const FlowOptions& opts = {});

/// Point-only flow from node first to node last; returns ξ at node last.
Vec flow_endpoint(const SdeSystem& system, const Vec& x0, const TimeGrid& grid,
                  const BrownianDraw& draw, int first, int last);

/// Flow restarted at node r from x_at_r with the parent's increments on [r, T].
FlowPath restart_flow(const SdeSystem& system, const PointOnM& x_at_r, const TimeGrid& grid,
                      const BrownianDraw& draw, int r, const FlowOptions& opts = {});

/// Antidevelopment increments P_k^{-1} X(x_k) ΔB_k in the frame of T_{x_0}M.
std::vector<Vec> antidevelopment_increments(const FlowPath& path, const SdeSystem& system);

/// W_k v0 along a path computed with FlowOptions::damped.
std::vector<TangentVec> damped_transport(const FlowPath& path, const TangentVec& v0);

/// Solution at parameter tau of d/dtau H = X(H) h (classical RK4, step <= 1/64).
PointOnM variation_flow(const SdeSystem& system, const Vec& h_value, double tau, const PointOnM& x);

/// H_{s_k}^tau(x) and its time derivative at every node for deterministic h.
struct VariationSeries {
  std::vector<Vec> points;
  std::vector<Vec> time_derivative;
};

VariationSeries variation_series(const SdeSystem& system, std::span<const Vec> h_nodes, double tau,
                                 const PointOnM& x, const TimeGrid& grid);

/// ξ_{t_j}(H_{t_j}^tau(x)) for each node index in cylinder_nodes, re-simulated on the same draw.
std::vector<Vec> perturbed_cylinder_points(const SdeSystem& system, const PointOnM& x,
                                           std::span<const Vec> h_nodes, double tau,
                                           std::span<const int> cylinder_nodes,
                                           const TimeGrid& grid, const BrownianDraw& draw);

/// M_T - 1/2 <M>_T with M_t = ∫ <X(ξ_s(x))^* Tξ_s(∂_s H_s^tau(x)), dB_s>.
double girsanov_log_density(const FlowPath& path, const SdeSystem& system,
                            const VariationSeries& variation, const TimeGrid& grid);
double girsanov_log_density(const FlowPath& path, const SdeSystem& system,
                            std::span<const Vec> h_nodes, double tau, const TimeGrid& grid);

}  // namespace ibplab
