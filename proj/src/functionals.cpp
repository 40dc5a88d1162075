#include "ibplab/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "ibplab/error.hpp"

namespace ibplab {

namespace {

double parse_number(std::string_view text, std::string_view context) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "bad number '" + s + "' in '" + std::string(context) + "'");
  }
  if (used != s.size()) throw Error(Errc::ParseError, "bad number '" + s + "' in '" + std::string(context) + "'");
  return v;
}

std::vector<double> parse_times(std::string_view text, std::string_view context) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_number(piece, context));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- CmProcess

CmProcess CmProcess::zero() { return {}; }

CmProcess CmProcess::linear(const Vec& u, const Vec& h0) {
  CmProcess h;
  h.kind_ = CmKind::Linear;
  h.u_ = u;
  h.h0_ = h0;
  return h;
}

CmProcess CmProcess::quadratic(const Vec& u) {
  CmProcess h;
  h.kind_ = CmKind::Quadratic;
  h.u_ = u;
  return h;
}

CmProcess CmProcess::piecewise_linear(std::vector<double> knot_times, std::vector<Vec> knot_values) {
  if (knot_times.empty() || knot_times.size() != knot_values.size()) {
    throw Error(Errc::InvalidArgument, "knot times and values must be non-empty and of equal length");
  }
  if (knot_times.front() != 0.0) throw Error(Errc::InvalidArgument, "first knot must be at time 0");
  if (!std::is_sorted(knot_times.begin(), knot_times.end()) ||
      std::adjacent_find(knot_times.begin(), knot_times.end()) != knot_times.end()) {
    throw Error(Errc::InvalidArgument, "knot times must be strictly increasing");
  }
  CmProcess h;
  h.kind_ = CmKind::PiecewiseLinear;
  h.h0_ = knot_values.front();
  h.knot_times_ = std::move(knot_times);
  h.knot_values_ = std::move(knot_values);
  return h;
}

CmProcess CmProcess::occupation(const Vec& u, int axis) {
  if (axis < 0 || axis >= kAmbientMax) throw Error(Errc::RangeError, "occupation axis out of range");
  CmProcess h;
  h.kind_ = CmKind::Occupation;
  h.u_ = u;
  h.axis_ = axis;
  return h;
}

Vec CmProcess::h0() const { return h0_; }

CmValue CmProcess::at_time(double s) const {
  switch (kind_) {
    case CmKind::Zero: return {};
    case CmKind::Linear: return {h0_ + s * u_, u_};
    case CmKind::Quadratic: return {s * s * u_, 2.0 * s * u_};
    case CmKind::PiecewiseLinear: {
      if (knot_times_.size() == 1) return {knot_values_.front(), Vec::Zero()};
      // Segment i covers (t_{i-1}, t_i]; s = 0 falls in the first one.
      auto it = std::lower_bound(knot_times_.begin() + 1, knot_times_.end(), s);
      if (it == knot_times_.end()) return {knot_values_.back(), Vec::Zero()};
      const auto i = static_cast<std::size_t>(it - knot_times_.begin());
      const double t0 = knot_times_[i - 1];
      const double t1 = knot_times_[i];
      const Vec slope = (knot_values_[i] - knot_values_[i - 1]) / (t1 - t0);
      return {knot_values_[i - 1] + (s - t0) * slope, slope};
    }
    case CmKind::Occupation:
      throw Error(Errc::InvalidArgument, "occupation-time process depends on the path");
  }
  return {};
}

std::vector<Vec> CmProcess::node_values(const TimeGrid& grid) const {
  std::vector<Vec> out(static_cast<std::size_t>(grid.steps() + 1));
  for (int k = 0; k <= grid.steps(); ++k) out[static_cast<std::size_t>(k)] = at_time(grid.time(k)).value;
  return out;
}

CmProcess::Cursor::Cursor(const CmProcess& h, const TimeGrid& grid, int first_node)
    : h_(&h), grid_(&grid), node_(first_node) {}

CmValue CmProcess::Cursor::advance(const Vec& x) {
  CmValue out;
  if (h_->deterministic()) {
    out = h_->at_time(grid_->time(node_));
  } else {
    const bool inside = x[h_->axis_] > 0.0;
    out.value = occupied_ * h_->u_;
    out.rate = inside ? h_->u_ : Vec::Zero();
    if (inside) occupied_ += grid_->dt();
  }
  ++node_;
  return out;
}

CmValue cm_eval(const CmProcess& h, std::span<const Vec> prefix, const TimeGrid& grid) {
  if (prefix.empty() || static_cast<int>(prefix.size()) > grid.steps() + 1) {
    throw Error(Errc::GridMismatch, "prefix length outside the grid");
  }
  CmProcess::Cursor cursor(h, grid);
  CmValue out;
  for (const Vec& x : prefix) out = cursor.advance(x);
  return out;
}

void cm_series(const CmProcess& h, const FlowPath& path, const TimeGrid& grid, std::vector<CmValue>& out) {
  out.resize(path.points.size());
  CmProcess::Cursor cursor(h, grid, path.first_node);
  for (std::size_t k = 0; k < path.points.size(); ++k) out[k] = cursor.advance(path.points[k]);
}

// ------------------------------------------------------------ CylFunctional

CylFunctional CylFunctional::coord(int axis, double t) {
  if (axis < 0 || axis >= kAmbientMax) throw Error(Errc::RangeError, "coordinate axis out of range");
  CylFunctional f;
  f.kind_ = CylKind::Coord;
  f.axis_ = axis;
  f.times_ = {t};
  return f;
}

CylFunctional CylFunctional::pairdot(double t1, double t2) {
  if (!(t1 < t2)) throw Error(Errc::RangeError, "pairdot times must increase");
  CylFunctional f;
  f.kind_ = CylKind::PairDot;
  f.times_ = {t1, t2};
  return f;
}

CylFunctional CylFunctional::constant(double c, double t) {
  CylFunctional f;
  f.kind_ = CylKind::Constant;
  f.c_ = c;
  f.times_ = {t};
  return f;
}

CylFunctional CylFunctional::gauss(int axis, double t) {
  CylFunctional f = coord(axis, t);
  f.kind_ = CylKind::Gauss;
  return f;
}

CylFunctional CylFunctional::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw Error(Errc::ParseError, "functional '" + std::string(text) + "' lacks '@<times>'");
  const auto head = text.substr(0, at);
  const auto times = parse_times(text.substr(at + 1), text);
  for (double t : times) {
    if (!(t > 0.0)) throw Error(Errc::RangeError, "functional times must be > 0 in '" + std::string(text) + "'");
  }
  const auto colon = head.find(':');
  const auto name = head.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : head.substr(colon + 1);
  auto single_time = [&]() {
    if (times.size() != 1) throw Error(Errc::ParseError, "'" + std::string(text) + "' takes one time");
    return times.front();
  };
  if (name == "coord") return coord(static_cast<int>(parse_number(arg, text)), single_time());
  if (name == "gauss") return gauss(static_cast<int>(parse_number(arg, text)), single_time());
  if (name == "const") return constant(parse_number(arg, text), single_time());
  if (name == "pairdot") {
    if (times.size() != 2) throw Error(Errc::ParseError, "pairdot takes two times");
    return pairdot(times[0], times[1]);
  }
  throw Error(Errc::UnknownName, "unknown functional '" + std::string(text) + "'");
}

std::string CylFunctional::name() const {
  std::string head;
  switch (kind_) {
    case CylKind::Coord: head = "coord:" + std::to_string(axis_); break;
    case CylKind::Gauss: head = "gauss:" + std::to_string(axis_); break;
    case CylKind::Constant: head = "const:" + format_number(c_); break;
    case CylKind::PairDot: head = "pairdot"; break;
  }
  head += '@';
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (i) head += ',';
    head += format_number(times_[i]);
  }
  return head;
}

CylFunctional CylFunctional::with_times(std::vector<double> times) const {
  if (times.size() != times_.size()) throw Error(Errc::InvalidArgument, "arity mismatch");
  CylFunctional f = *this;
  f.times_ = std::move(times);
  return f;
}

double CylFunctional::value(std::span<const Vec> pts) const {
  switch (kind_) {
    case CylKind::Coord: return pts[0][axis_];
    case CylKind::Gauss: return std::exp(-pts[0][axis_] * pts[0][axis_]);
    case CylKind::Constant: return c_;
    case CylKind::PairDot: return pts[0].dot(pts[1]);
  }
  return 0.0;
}

Vec CylFunctional::gradient(std::size_t slot, std::span<const Vec> pts) const {
  switch (kind_) {
    case CylKind::Coord: return Vec::Unit(axis_);
    case CylKind::Gauss: {
      const double x = pts[0][axis_];
      return -2.0 * x * std::exp(-x * x) * Vec::Unit(axis_);
    }
    case CylKind::Constant: return Vec::Zero();
    case CylKind::PairDot: return slot == 0 ? pts[1] : pts[0];
  }
  return Vec::Zero();
}

std::vector<int> cylinder_nodes(const CylFunctional& f, const TimeGrid& grid) {
  std::vector<int> nodes;
  nodes.reserve(f.arity());
  for (double t : f.times()) nodes.push_back(grid.index_of(t));
  return nodes;
}

double eval_F(const CylFunctional& f, const FlowPath& path, const TimeGrid& grid) {
  std::array<Vec, 2> pts;
  const auto nodes = cylinder_nodes(f, grid);
  for (std::size_t j = 0; j < nodes.size(); ++j) pts[j] = path.point_at(nodes[j]);
  return f.value(std::span<const Vec>(pts.data(), nodes.size()));
}

double eval_F(const CylFunctional& f, std::span<const Vec> pts) {
  if (pts.size() != f.arity()) throw Error(Errc::InvalidArgument, "wrong number of points for functional");
  return f.value(pts);
}

double eval_dF(const CylFunctional& f, std::span<const Vec> pts, std::span<const Vec> tangents) {
  if (pts.size() != f.arity() || tangents.size() != f.arity()) {
    throw Error(Errc::InvalidArgument, "wrong number of slots for functional derivative");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) sum += f.gradient(j, pts).dot(tangents[j]);
  return sum;
}

std::vector<Vec> v_h_field(const FlowPath& path, std::span<const int> nodes, std::span<const CmValue> h) {
  std::vector<Vec> out;
  out.reserve(nodes.size());
  for (int node : nodes) {
    const int k = path.local(node);
    out.push_back(path.deriv[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(k)].value);
  }
  return out;
}

double delta_v_h(const FlowPath& path, std::span<const CmValue> h) {
  double sum = 0.0;
  for (std::size_t k = 0; k < path.pushed_noise.size(); ++k) {
    sum += (path.deriv[k] * h[k].rate).dot(path.pushed_noise[k]);
  }
  return sum;
}

// ------------------------------------------------------- VectorFieldProcess

VectorFieldProcess VectorFieldProcess::zero() {
  auto z = [](double, const Vec&) -> Vec { return Vec::Zero(); };
  return {"hfield:zero", z, z,
          VectorField{"zero", [](const Vec&) -> Vec { return Vec::Zero(); }, [](const Vec&) { return 0.0; }}};
}

VectorFieldProcess VectorFieldProcess::killing(const Vec& axis) {
  const VectorField rot = fields::rotation(axis);
  return {"hfield:killing", [axis](double, const Vec& x) -> Vec { return axis.cross(x); },
          [](double, const Vec&) -> Vec { return Vec::Zero(); }, rot};
}

VectorFieldProcess VectorFieldProcess::radial(const ManifoldSpec& spec) {
  const VectorField g = fields::coordinate_gradient(spec, spec.ambient_dim() - 1);
  auto gv = g.value;
  return {"hfield:radial", [gv](double t, const Vec& x) -> Vec { return t * gv(x); },
          [gv](double, const Vec& x) -> Vec { return gv(x); }, zero().initial};
}

VectorFieldProcess VectorFieldProcess::gradient_constant(const ManifoldSpec& spec) {
  const VectorField g = fields::coordinate_gradient(spec, spec.ambient_dim() - 1);
  auto gv = g.value;
  return {"hfield:gradient", [gv](double, const Vec& x) -> Vec { return gv(x); },
          [](double, const Vec&) -> Vec { return Vec::Zero(); }, g};
}

VectorFieldProcess VectorFieldProcess::parse(std::string_view text, const ManifoldSpec& spec) {
  if (text == "hfield:zero") return zero();
  if (text == "hfield:killing") return killing(Vec::UnitZ());
  if (text == "hfield:radial") return radial(spec);
  if (text == "hfield:gradient") return gradient_constant(spec);
  throw Error(Errc::UnknownName, "unknown vector-field process '" + std::string(text) + "'");
}

}  // namespace ibplab
