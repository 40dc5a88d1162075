#include "ibplab/system.hpp"

#include <string>

#include "ibplab/error.hpp"

namespace ibplab {

namespace {

Mat cross_matrix(const Vec& a) {
  Mat k;
  k << 0.0, -a[2], a[1],
       a[2], 0.0, -a[0],
       -a[1], a[0], 0.0;
  return k;
}

int parse_dim(std::string_view text, std::string_view what) {
  const std::string s(text);
  std::size_t used = 0;
  int d = 0;
  try {
    d = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "bad dimension '" + s + "' in " + std::string(what));
  }
  if (used != s.size()) throw Error(Errc::ParseError, "bad dimension '" + s + "' in " + std::string(what));
  return d;
}

}  // namespace

Vec DriftField::value(const ManifoldSpec& spec, const Vec& x) const {
  switch (kind) {
    case DriftKind::Zero: return Vec::Zero();
    case DriftKind::LinearDecay: return -coeff * (spec.ambient_identity() * x);
    case DriftKind::Rotation: return coeff * axis.cross(x);
    case DriftKind::CoordinateGradient: {
      const Vec e = Vec::Unit(coord);
      if (spec.kind() == ManifoldKind::Euclidean) return coeff * e;
      return coeff * (e - x[coord] * x);
    }
  }
  return Vec::Zero();
}

Mat DriftField::jacobian(const ManifoldSpec& spec, const Vec& x) const {
  switch (kind) {
    case DriftKind::Zero: return Mat::Zero();
    case DriftKind::LinearDecay: return -coeff * spec.ambient_identity();
    case DriftKind::Rotation: return coeff * cross_matrix(axis);
    case DriftKind::CoordinateGradient: {
      if (spec.kind() == ManifoldKind::Euclidean) return Mat::Zero();
      return -coeff * (x * Vec::Unit(coord).transpose() + x[coord] * spec.ambient_identity());
    }
  }
  return Mat::Zero();
}

SdeSystem::SdeSystem(std::string name, ManifoldSpec manifold, DiffusionKind diffusion, double scale,
                     DriftField drift, DriftField generator_drift)
    : name_(std::move(name)),
      manifold_(manifold),
      diffusion_(diffusion),
      scale_(scale),
      noise_dim_(manifold.ambient_dim()),
      drift_(drift),
      generator_drift_(generator_drift) {}

// For gradient systems the Stratonovich correction vanishes, so Z = A.

SdeSystem SdeSystem::euclidean_bm(int dim) {
  return {"euclidean-bm:" + std::to_string(dim), ManifoldSpec::euclidean(dim),
          DiffusionKind::TangentProjection, 1.0, {}, {}};
}

SdeSystem SdeSystem::euclidean_ou(int dim) {
  DriftField decay{DriftKind::LinearDecay, 1.0, Vec::Zero(), 0};
  return {"euclidean-ou:" + std::to_string(dim), ManifoldSpec::euclidean(dim),
          DiffusionKind::TangentProjection, 1.0, decay, decay};
}

SdeSystem SdeSystem::euclidean_scaled(int dim, double scale) {
  return {"euclidean-scaled:" + std::to_string(dim), ManifoldSpec::euclidean(dim), DiffusionKind::Scaled,
          scale, {}, {}};
}

SdeSystem SdeSystem::circle_bm() {
  return {"circle-bm", ManifoldSpec::circle(), DiffusionKind::TangentProjection, 1.0, {}, {}};
}

SdeSystem SdeSystem::sphere2_bm() {
  return {"sphere2-bm", ManifoldSpec::sphere2(), DiffusionKind::TangentProjection, 1.0, {}, {}};
}

SdeSystem SdeSystem::sphere2_drift(std::string_view name) {
  DriftField drift;
  if (name == "rotation") {
    drift = {DriftKind::Rotation, 1.0, Vec::UnitZ(), 0};
  } else if (name == "north") {
    drift = {DriftKind::CoordinateGradient, 1.0, Vec::Zero(), 2};
  } else {
    throw Error(Errc::UnknownName, "unknown sphere drift '" + std::string(name) + "'");
  }
  return {"sphere2-drift:" + std::string(name), ManifoldSpec::sphere2(), DiffusionKind::TangentProjection,
          1.0, drift, drift};
}

SdeSystem SdeSystem::parse(std::string_view text) {
  if (text == "circle-bm") return circle_bm();
  if (text == "sphere2-bm") return sphere2_bm();
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    const auto arg = text.substr(colon + 1);
    if (head == "euclidean-bm") return euclidean_bm(parse_dim(arg, text));
    if (head == "euclidean-ou") return euclidean_ou(parse_dim(arg, text));
    if (head == "euclidean-scaled") return euclidean_scaled(parse_dim(arg, text), 2.0);
    if (head == "sphere2-drift") return sphere2_drift(arg);
  }
  throw Error(Errc::UnknownName, "unknown system '" + std::string(text) + "'");
}

Mat SdeSystem::diffusion(const Vec& x) const {
  if (diffusion_ == DiffusionKind::Scaled) return scale_ * manifold_.ambient_identity();
  return tangent_projector(manifold_, x);
}

Vec SdeSystem::apply_diffusion(const Vec& x, const Vec& b) const {
  const Vec bb = manifold_.ambient_identity() * b;
  if (diffusion_ == DiffusionKind::Scaled) return scale_ * bb;
  if (manifold_.kind() == ManifoldKind::Euclidean) return bb;
  return bb - x * x.dot(bb);
}

Vec SdeSystem::apply_diffusion_adjoint(const Vec& x, const Vec& u) const {
  // Both diffusion kinds are symmetric ambient matrices.
  return apply_diffusion(x, u);
}

Mat SdeSystem::diffusion_jacobian(const Vec& x, const Vec& b) const {
  if (diffusion_ == DiffusionKind::Scaled || manifold_.kind() == ManifoldKind::Euclidean) {
    return Mat::Zero();
  }
  const Vec bb = manifold_.ambient_identity() * b;
  // d/dw [b - x <x, b>] = -w <x, b> - x <w, b>
  return -x.dot(bb) * manifold_.ambient_identity() - x * bb.transpose();
}

}  // namespace ibplab
