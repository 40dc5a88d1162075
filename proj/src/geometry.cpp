#include "ibplab/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ibplab/error.hpp"

namespace ibplab {

namespace {

constexpr double kTiny = 1e-300;

// Inverse square root of a symmetric positive definite 2x2 block.
Eigen::Matrix2d inverse_sqrt_2x2(const Eigen::Matrix2d& g) {
  const double s = std::sqrt(g.determinant());
  const double t = std::sqrt(g.trace() + 2.0 * s);
  const Eigen::Matrix2d root = (g + s * Eigen::Matrix2d::Identity()) / t;
  return root.inverse();
}

}  // namespace

ManifoldSpec::ManifoldSpec(ManifoldKind kind, int ambient, int intrinsic)
    : kind_(kind), ambient_dim_(ambient), intrinsic_dim_(intrinsic), ambient_identity_(Mat::Zero()) {
  for (int i = 0; i < ambient; ++i) ambient_identity_(i, i) = 1.0;
}

ManifoldSpec ManifoldSpec::euclidean(int dim) {
  if (dim < 1 || dim > kAmbientMax) {
    throw Error(Errc::RangeError, "euclidean dimension must be in 1.." + std::to_string(kAmbientMax));
  }
  return ManifoldSpec(ManifoldKind::Euclidean, dim, dim);
}

ManifoldSpec ManifoldSpec::circle() { return ManifoldSpec(ManifoldKind::Circle, 2, 1); }

ManifoldSpec ManifoldSpec::sphere2() { return ManifoldSpec(ManifoldKind::Sphere2, 3, 2); }

ManifoldSpec ManifoldSpec::parse(std::string_view text) {
  if (text == "circle") return circle();
  if (text == "sphere2") return sphere2();
  constexpr std::string_view prefix = "euclidean:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string rest(text.substr(prefix.size()));
    std::size_t used = 0;
    int dim = 0;
    try {
      dim = std::stoi(rest, &used);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad euclidean dimension '" + rest + "'");
    }
    if (used != rest.size()) throw Error(Errc::ParseError, "bad euclidean dimension '" + rest + "'");
    return euclidean(dim);
  }
  throw Error(Errc::UnknownName, "unknown manifold '" + std::string(text) + "'");
}

std::string ManifoldSpec::name() const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return "euclidean:" + std::to_string(ambient_dim_);
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Sphere2: return "sphere2";
  }
  return "?";
}

bool ManifoldSpec::contains(const Vec& p) const {
  for (int i = ambient_dim_; i < kAmbientMax; ++i) {
    if (p[i] != 0.0) return false;
  }
  if (kind_ == ManifoldKind::Euclidean) return p.allFinite();
  return std::abs(p.norm() - 1.0) <= constraint_tolerance_;
}

PointOnM project_to_manifold(const ManifoldSpec& spec, const Vec& p) {
  Vec q = spec.ambient_identity() * p;
  if (spec.kind() == ManifoldKind::Euclidean) return {q};
  const double n = q.norm();
  if (n < kTiny) throw Error(Errc::ZeroVector, "cannot project the origin onto " + spec.name());
  return {q / n};
}

Mat tangent_projector(const ManifoldSpec& spec, const Vec& x) {
  if (spec.kind() == ManifoldKind::Euclidean) return spec.ambient_identity();
  return spec.ambient_identity() - x * x.transpose();
}

TangentVec tangent_project(const ManifoldSpec& spec, const PointOnM& x, const Vec& w) {
  return {x.coords, tangent_projector(spec, x.coords) * w};
}

Mat ricci_matrix(const ManifoldSpec& spec, const Vec& x) {
  if (spec.kind() == ManifoldKind::Sphere2) {
    // Unit 2-sphere: Ric = (n - 1) g with n = 2.
    return tangent_projector(spec, x);
  }
  return Mat::Zero();
}

TangentVec ricci_sharp(const ManifoldSpec& spec, const TangentVec& v) {
  return {v.base, ricci_matrix(spec, v.base) * v.coords};
}

Mat tangent_frame(const ManifoldSpec& spec, const Vec& x) {
  Mat frame = Mat::Zero();
  switch (spec.kind()) {
    case ManifoldKind::Euclidean:
      frame = spec.ambient_identity();
      break;
    case ManifoldKind::Circle:
      frame.col(0) = Vec(-x[1], x[0], 0.0);
      break;
    case ManifoldKind::Sphere2: {
      int axis = 0;
      x.cwiseAbs().minCoeff(&axis);
      Vec e = Vec::Unit(axis);
      e -= x * x.dot(e);
      e.normalize();
      frame.col(0) = e;
      frame.col(1) = x.cross(e);
      break;
    }
  }
  return frame;
}

TangentVec transport_step(const ManifoldSpec& spec, const PointOnM& from, const PointOnM& to,
                          const TangentVec& v) {
  if (spec.kind() == ManifoldKind::Euclidean) return {to.coords, v.coords};
  if ((to.coords - from.coords).norm() >= kMaxTransportStep) {
    throw Error(Errc::StepTooLarge, "transport step longer than 0.5");
  }
  const double len = v.coords.norm();
  Vec w = tangent_projector(spec, to.coords) * v.coords;
  const double wlen = w.norm();
  if (len == 0.0 || wlen < kTiny) return {to.coords, Vec::Zero()};
  return {to.coords, w * (len / wlen)};
}

Mat transport_frame(const ManifoldSpec& spec, const Mat& frame, const Vec& from, const Vec& to) {
  if (spec.kind() == ManifoldKind::Euclidean) return frame;
  if ((to - from).norm() >= kMaxTransportStep) {
    throw Error(Errc::StepTooLarge, "transport step longer than 0.5");
  }
  switch (spec.kind()) {
    case ManifoldKind::Euclidean:
      return frame;
    case ManifoldKind::Circle: {
      Mat out = Mat::Zero();
      Vec w = tangent_projector(spec, to) * frame.col(0);
      out.col(0) = w / w.norm();
      return out;
    }
    case ManifoldKind::Sphere2: {
      const Mat p = tangent_projector(spec, to);
      Eigen::Matrix<double, 3, 2> f = p * frame.leftCols<2>();
      const Eigen::Matrix2d g = f.transpose() * f;
      Mat out = Mat::Zero();
      out.leftCols<2>() = f * inverse_sqrt_2x2(g);
      return out;
    }
  }
  return frame;
}

double divergence(const ManifoldSpec& spec, const VectorField& field, const PointOnM& x,
                  DivergenceMode mode) {
  if (mode == DivergenceMode::Analytic) {
    if (!field.divergence) {
      throw Error(Errc::InvalidArgument, "field '" + field.name + "' has no closed-form divergence");
    }
    return field.divergence(x.coords);
  }
  const Mat frame = tangent_frame(spec, x.coords);
  const double h = kDivergenceStep;
  double div = 0.0;
  for (int i = 0; i < spec.intrinsic_dim(); ++i) {
    const Vec e = frame.col(i);
    const Vec plus = project_to_manifold(spec, x.coords + h * e).coords;
    const Vec minus = project_to_manifold(spec, x.coords - h * e).coords;
    const Vec vp = tangent_projector(spec, plus) * field.value(plus);
    const Vec vm = tangent_projector(spec, minus) * field.value(minus);
    div += e.dot(vp - vm) / (2.0 * h);
  }
  return div;
}

PointOnM uniform_sample(const ManifoldSpec& spec, std::mt19937_64& rng) {
  switch (spec.kind()) {
    case ManifoldKind::Euclidean:
      throw Error(Errc::UnboundedVolume, "no uniform distribution on " + spec.name());
    case ManifoldKind::Circle: {
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      const double a = angle(rng);
      return {Vec(std::cos(a), std::sin(a), 0.0)};
    }
    case ManifoldKind::Sphere2: {
      std::normal_distribution<double> normal;
      Vec g;
      do {
        g = Vec(normal(rng), normal(rng), normal(rng));
      } while (g.norm() < 1e-12);
      return {g.normalized()};
    }
  }
  return {Vec::Zero()};
}

double riemannian_volume(const ManifoldSpec& spec) {
  switch (spec.kind()) {
    case ManifoldKind::Euclidean:
      throw Error(Errc::UnboundedVolume, spec.name() + " has infinite volume");
    case ManifoldKind::Circle: return 2.0 * std::numbers::pi;
    case ManifoldKind::Sphere2: return 4.0 * std::numbers::pi;
  }
  return 0.0;
}

namespace fields {

VectorField identity(const ManifoldSpec& spec) {
  const Mat id = spec.ambient_identity();
  const double dim = spec.ambient_dim();
  return {"identity", [id](const Vec& x) -> Vec { return id * x; },
          [dim](const Vec&) { return dim; }};
}

VectorField rotation(const Vec& axis) {
  return {"rotation", [axis](const Vec& x) -> Vec { return axis.cross(x); },
          [](const Vec&) { return 0.0; }};
}

VectorField coordinate_gradient(const ManifoldSpec& spec, int axis) {
  if (axis < 0 || axis >= spec.ambient_dim()) {
    throw Error(Errc::RangeError, "coordinate axis out of range for " + spec.name());
  }
  const Vec e = Vec::Unit(axis);
  if (spec.kind() == ManifoldKind::Euclidean) {
    return {"coordinate_gradient", [e](const Vec&) -> Vec { return e; },
            [](const Vec&) { return 0.0; }};
  }
  // On the unit n-sphere the coordinate functions satisfy Δ x_i = -n x_i.
  const double n = spec.intrinsic_dim();
  return {"coordinate_gradient", [e, axis](const Vec& x) -> Vec { return e - x[axis] * x; },
          [n, axis](const Vec& x) { return -n * x[axis]; }};
}

}  // namespace fields

}  // namespace ibplab
