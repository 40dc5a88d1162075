#pragma once

#include <string>
#include <string_view>

#include "ibplab/geometry.hpp"

namespace ibplab {

enum class DiffusionKind {
  /// X(x) = orthogonal projection R^n -> T_xM (gradient Brownian system).
  TangentProjection,
  /// X(x) = c * identity on Euclidean space. Not isometric, so not a gradient system.
  Scaled,
};

enum class DriftKind { Zero, LinearDecay, Rotation, CoordinateGradient };

/// Closed-form tangent drift field with its ambient Jacobian.
struct DriftField {
  DriftKind kind = DriftKind::Zero;
  double coeff = 0.0;
  Vec axis = Vec::Zero();
  int coord = 0;

  Vec value(const ManifoldSpec& spec, const Vec& x) const;
  Mat jacobian(const ManifoldSpec& spec, const Vec& x) const;
};

/// Stratonovich system dx = X(x) o dB + A(x) dt with generator 1/2 Δ + Z.
class SdeSystem {
 public:
  static SdeSystem euclidean_bm(int dim);
  static SdeSystem euclidean_ou(int dim);
  static SdeSystem euclidean_scaled(int dim, double scale);
  static SdeSystem circle_bm();
  static SdeSystem sphere2_bm();
  /// name: "rotation" (Killing drift about e_z) or "north" (gradient of z).
  static SdeSystem sphere2_drift(std::string_view name);

  /// Accepts "euclidean-bm:<d>", "euclidean-ou:<d>", "euclidean-scaled:<d>",
  /// "circle-bm", "sphere2-bm", "sphere2-drift:<name>".
  static SdeSystem parse(std::string_view text);

  const std::string& name() const noexcept { return name_; }
  const ManifoldSpec& manifold() const noexcept { return manifold_; }
  int noise_dim() const noexcept { return noise_dim_; }
  bool gradient_system() const noexcept { return diffusion_ == DiffusionKind::TangentProjection; }

  /// X(x) as an ambient x noise matrix.
  Mat diffusion(const Vec& x) const;
  /// X(x) b.
  Vec apply_diffusion(const Vec& x, const Vec& b) const;
  /// X(x)^* u.
  Vec apply_diffusion_adjoint(const Vec& x, const Vec& u) const;
  /// Matrix J with J w = (d/dw X)(x) b.
  Mat diffusion_jacobian(const Vec& x, const Vec& b) const;

  Vec drift(const Vec& x) const { return drift_.value(manifold_, x); }
  Mat drift_jacobian(const Vec& x) const { return drift_.jacobian(manifold_, x); }
  Vec generator_drift(const Vec& x) const { return generator_drift_.value(manifold_, x); }
  Mat generator_drift_jacobian(const Vec& x) const { return generator_drift_.jacobian(manifold_, x); }

 private:
  SdeSystem(std::string name, ManifoldSpec manifold, DiffusionKind diffusion, double scale,
            DriftField drift, DriftField generator_drift);

  std::string name_;
  ManifoldSpec manifold_;
  DiffusionKind diffusion_;
  double scale_;
  int noise_dim_;
  DriftField drift_;
  DriftField generator_drift_;
};

}  // namespace ibplab
