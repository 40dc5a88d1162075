#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibplab/flow.hpp"
#include "ibplab/geometry.hpp"

namespace ibplab {

struct CmValue {
  Vec value = Vec::Zero();
  Vec rate = Vec::Zero();
};

enum class CmKind { Zero, Linear, Quadratic, PiecewiseLinear, Occupation };

/// Cameron-Martin perturbation h with values in T_{x_0}M (or the noise space
/// for variation flows). Adapted kinds only ever see the path up to the
/// current node.
class CmProcess {
 public:
  static CmProcess zero();
  /// h_s = h0 + s u
  static CmProcess linear(const Vec& u, const Vec& h0 = Vec::Zero());
  /// h_s = s^2 u
  static CmProcess quadratic(const Vec& u);
  /// Piecewise-linear interpolation through (knot_times, knot_values); the
  /// first knot must be at 0.
  static CmProcess piecewise_linear(std::vector<double> knot_times, std::vector<Vec> knot_values);
  /// h_t = (∫_0^t 1{x_s[axis] > 0} ds) u, accumulated left-point on the grid.
  static CmProcess occupation(const Vec& u, int axis);

  CmKind kind() const noexcept { return kind_; }
  bool deterministic() const noexcept { return kind_ != CmKind::Occupation; }
  const Vec& direction() const noexcept { return u_; }
  Vec h0() const;

  /// Deterministic kinds only. The rate is the left derivative at interior knots.
  CmValue at_time(double s) const;

  /// Values at every node of the grid (deterministic kinds only).
  std::vector<Vec> node_values(const TimeGrid& grid) const;

  /// Streaming evaluator: feed path nodes in order, get (h, ḣ) at each node.
  class Cursor {
   public:
    Cursor(const CmProcess& h, const TimeGrid& grid, int first_node = 0);
    CmValue advance(const Vec& x);

   private:
    const CmProcess* h_;
    const TimeGrid* grid_;
    int node_;
    double occupied_ = 0.0;
  };

 private:
  CmKind kind_ = CmKind::Zero;
  Vec u_ = Vec::Zero();
  Vec h0_ = Vec::Zero();
  int axis_ = 0;
  std::vector<double> knot_times_;
  std::vector<Vec> knot_values_;
};

/// (h, ḣ) at the last node of the prefix; the rule never sees later nodes.
CmValue cm_eval(const CmProcess& h, std::span<const Vec> prefix, const TimeGrid& grid);

/// (h, ḣ) at every node of the path.
void cm_series(const CmProcess& h, const FlowPath& path, const TimeGrid& grid, std::vector<CmValue>& out);

enum class CylKind { Coord, PairDot, Constant, Gauss };

/// F(γ) = f(γ_{t_1}, ..., γ_{t_k}) with analytic partial gradients.
class CylFunctional {
 public:
  static CylFunctional coord(int axis, double t);
  static CylFunctional pairdot(double t1, double t2);
  static CylFunctional constant(double c, double t);
  /// f(x) = exp(-x_axis^2)
  static CylFunctional gauss(int axis, double t);

  /// "coord:<axis>@<t>", "pairdot@<t1>,<t2>", "const:<c>@<t>", "gauss:<axis>@<t>".
  static CylFunctional parse(std::string_view text);

  CylKind kind() const noexcept { return kind_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t arity() const noexcept { return times_.size(); }
  std::string name() const;
  CylFunctional with_times(std::vector<double> times) const;

  double value(std::span<const Vec> pts) const;
  /// Ambient gradient of f in slot j; paired with tangent vectors only.
  Vec gradient(std::size_t slot, std::span<const Vec> pts) const;

 private:
  CylKind kind_ = CylKind::Constant;
  int axis_ = 0;
  double c_ = 0.0;
  std::vector<double> times_;
};

/// Grid nodes of the functional's times.
std::vector<int> cylinder_nodes(const CylFunctional& f, const TimeGrid& grid);

double eval_F(const CylFunctional& f, const FlowPath& path, const TimeGrid& grid);
double eval_F(const CylFunctional& f, std::span<const Vec> pts);
/// Σ_j d^j f(pts)(v_j)
double eval_dF(const CylFunctional& f, std::span<const Vec> pts, std::span<const Vec> tangents);

/// V_{t_j} = D_{t_j}(h_{t_j}) for each of the given nodes.
std::vector<Vec> v_h_field(const FlowPath& path, std::span<const int> nodes, std::span<const CmValue> h);

/// Σ_k <D_k ḣ_k, X(x_k) ΔB_k>, left point.
double delta_v_h(const FlowPath& path, std::span<const CmValue> h);

/// Time-dependent tangent field h_t(x) used on the free path space.
struct VectorFieldProcess {
  std::string name;
  std::function<Vec(double, const Vec&)> value;
  std::function<Vec(double, const Vec&)> rate;
  /// h_0 with its registered divergence.
  VectorField initial;

  static VectorFieldProcess zero();
  /// Time-constant rotation about axis: ḣ = 0, div h_0 = 0.
  static VectorFieldProcess killing(const Vec& axis);
  /// h_t(x) = t grad(x_last)(x); h_0 = 0.
  static VectorFieldProcess radial(const ManifoldSpec& spec);
  /// h_t(x) = grad(x_last)(x) for all t; nonzero divergence at time 0.
  static VectorFieldProcess gradient_constant(const ManifoldSpec& spec);

  /// "hfield:zero", "hfield:killing", "hfield:radial", "hfield:gradient".
  static VectorFieldProcess parse(std::string_view text, const ManifoldSpec& spec);
};

}  // namespace ibplab
