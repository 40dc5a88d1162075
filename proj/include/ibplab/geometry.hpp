#pragma once

#include <functional>
#include <random>
#include <string>
#include <string_view>

#include "ibplab/linalg.hpp"

namespace ibplab {

enum class ManifoldKind { Euclidean, Circle, Sphere2 };

/// One of the catalog manifolds, embedded in R^ambient_dim.
class ManifoldSpec {
 public:
  static ManifoldSpec euclidean(int dim);
  static ManifoldSpec circle();
  static ManifoldSpec sphere2();

  /// Accepts "euclidean:<d>", "circle", "sphere2".
  static ManifoldSpec parse(std::string_view text);

  ManifoldKind kind() const noexcept { return kind_; }
  int ambient_dim() const noexcept { return ambient_dim_; }
  int intrinsic_dim() const noexcept { return intrinsic_dim_; }
  double constraint_tolerance() const noexcept { return constraint_tolerance_; }
  bool compact() const noexcept { return kind_ != ManifoldKind::Euclidean; }
  std::string name() const;

  /// Orthogonal projector onto the ambient coordinate subspace R^ambient_dim.
  const Mat& ambient_identity() const noexcept { return ambient_identity_; }

  bool contains(const Vec& p) const;

  bool operator==(const ManifoldSpec& other) const {
    return kind_ == other.kind_ && ambient_dim_ == other.ambient_dim_;
  }

 private:
  ManifoldSpec(ManifoldKind kind, int ambient, int intrinsic);

  ManifoldKind kind_;
  int ambient_dim_;
  int intrinsic_dim_;
  double constraint_tolerance_ = 1e-9;
  Mat ambient_identity_;
};

struct PointOnM {
  Vec coords;
};

struct TangentVec {
  Vec base;
  Vec coords;
};

PointOnM project_to_manifold(const ManifoldSpec& spec, const Vec& p);

/// Matrix of the orthogonal projection R^3 -> T_xM (zero outside the ambient subspace).
Mat tangent_projector(const ManifoldSpec& spec, const Vec& x);

TangentVec tangent_project(const ManifoldSpec& spec, const PointOnM& x, const Vec& w);

/// Ricci operator of the Levi-Civita connection as an ambient matrix acting on T_xM.
Mat ricci_matrix(const ManifoldSpec& spec, const Vec& x);
TangentVec ricci_sharp(const ManifoldSpec& spec, const TangentVec& v);

/// Orthonormal basis of T_xM in the first intrinsic_dim() columns, zeros elsewhere.
Mat tangent_frame(const ManifoldSpec& spec, const Vec& x);

/// Parallel transport of a single vector over one short step: project onto the
/// new tangent space and restore the original length.
TangentVec transport_step(const ManifoldSpec& spec, const PointOnM& from, const PointOnM& to,
                          const TangentVec& v);

/// Frame version of transport_step: projects every frame vector and then
/// re-orthonormalizes symmetrically, so the result is an exact isometry.
Mat transport_frame(const ManifoldSpec& spec, const Mat& frame, const Vec& from, const Vec& to);

inline constexpr double kMaxTransportStep = 0.5;

struct VectorField {
  std::string name;
  std::function<Vec(const Vec&)> value;
  /// Closed-form divergence; empty when only the numeric mode is available.
  std::function<double(const Vec&)> divergence;
};

enum class DivergenceMode { Analytic, Numeric };

inline constexpr double kDivergenceStep = 1e-5;

double divergence(const ManifoldSpec& spec, const VectorField& field, const PointOnM& x,
                  DivergenceMode mode);

PointOnM uniform_sample(const ManifoldSpec& spec, std::mt19937_64& rng);
double riemannian_volume(const ManifoldSpec& spec);

namespace fields {

/// x -> x on Euclidean space.
VectorField identity(const ManifoldSpec& spec);
/// x -> axis × x, a Killing field of the sphere (rotation about axis).
VectorField rotation(const Vec& axis);
/// Gradient of the ambient coordinate function x_axis restricted to the manifold.
VectorField coordinate_gradient(const ManifoldSpec& spec, int axis);

}  // namespace fields

}  // namespace ibplab
