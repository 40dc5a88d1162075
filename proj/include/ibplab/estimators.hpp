#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ibplab/flow.hpp"
#include "ibplab/functionals.hpp"
#include "ibplab/parallel.hpp"
#include "ibplab/stats.hpp"
#include "ibplab/system.hpp"

namespace ibplab {

/// Shared Monte Carlo settings for one experiment.
struct McConfig {
  std::size_t n_paths = 100000;
  int steps_per_unit = 512;
  std::uint64_t seed = 1;
  RunOptions run{};
  /// Multiplies every right-hand-side sample; 1 outside harness self-tests.
  double debug_rhs_scale = 1.0;
};

/// Weight Ψ on [0, T] with an optional closed-form integral.
struct WeightFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> exact_integral;  // T -> ∫_0^T Ψ, may be empty

  static WeightFunction constant(double c);
  static WeightFunction linear();
  /// Indicator of [r, r + width) evaluated at grid nodes.
  static WeightFunction window(double r, double width);
  /// "const:<c>", "linear", "window:<r>,<width>"
  static WeightFunction parse(std::string_view text);

  /// ∫_0^T Ψ: closed form when registered, trapezoid on the grid otherwise.
  double integral(const TimeGrid& grid) const;
};

/// One member of the gradient-estimator family, applied per path.
struct GradientMethod {
  EstimatorKind kind = EstimatorKind::Bismut;
  double r = 0.0;
  double width = 0.0;
  std::optional<WeightFunction> psi;
  double eps = 1e-2;

  static GradientMethod bismut();
  static GradientMethod thalmaier(double r, double width);
  static GradientMethod psi_weighted(WeightFunction psi);
  static GradientMethod finite_difference(double eps);
};

GradientEstimate bismut_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                 const CylFunctional& f, double T, const McConfig& mc);
GradientEstimate thalmaier_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                    const CylFunctional& f, double T, double r, double width,
                                    const McConfig& mc);
GradientEstimate psi_weighted_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                       const CylFunctional& f, double T, const WeightFunction& psi,
                                       const McConfig& mc);
/// Central difference of f(ξ_T) in the start point along v0 on common draws.
GradientEstimate crn_fd_gradient(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                 const CylFunctional& f, double T, double eps, const McConfig& mc);
GradientEstimate gradient_estimate(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                                   const CylFunctional& f, double T, const GradientMethod& method,
                                   const McConfig& mc);

/// Paired comparison of two gradient estimators on shared draws (lhs = a, rhs = b).
IbpReport compare_gradients(const SdeSystem& system, const PointOnM& x, const TangentVec& v0,
                            const CylFunctional& f, double T, const GradientMethod& a,
                            const GradientMethod& b, const McConfig& mc);

IbpReport lemma21_integrated_check(const SdeSystem& system, const PointOnM& x, const CylFunctional& f,
                                   const CmProcess& h, double t, double T, const McConfig& mc);

/// lhs: f(ξ_T) δV^h; rhs: df(Tξ_T(h_T - h_0)).
IbpReport function_ibp_check(const SdeSystem& system, const PointOnM& x, const CylFunctional& f,
                             const CmProcess& h, double T, const McConfig& mc);

/// lhs: dF(V^h); rhs: F δV^h.
IbpReport pathspace_ibp(const SdeSystem& system, const PointOnM& x, const CylFunctional& F,
                        const CmProcess& h, double T, const McConfig& mc);

/// lhs: dF(W(h)); rhs: F ∫ <W(ḣ), // dB~>.
IbpReport damped_ibp(const SdeSystem& system, const PointOnM& x, const CylFunctional& F, const CmProcess& h,
                     double T, const McConfig& mc);

/// lhs: F(ξ^tau); rhs: F(ξ) exp(log-density).
IbpReport girsanov_invariance(const SdeSystem& system, const PointOnM& x, const CylFunctional& F,
                              const CmProcess& h, double tau, double T, const McConfig& mc);

/// lhs: exp(log-density); rhs: 1.
IbpReport girsanov_martingale(const SdeSystem& system, const PointOnM& x, const CmProcess& h, double tau,
                              double T, const McConfig& mc);

struct GirsanovDerivativeReport {
  IbpReport direct;        // dF(Tξ(X(x)h)) vs rhs
  IbpReport fd;            // CRN central difference in tau vs rhs
  IbpReport fd_vs_direct;  // fd vs direct
};

GirsanovDerivativeReport girsanov_derivative(const SdeSystem& system, const PointOnM& x,
                                             const CylFunctional& F, const CmProcess& h, double T,
                                             const McConfig& mc, double eps = 0.02);

/// Integration by parts on the free path space; mc.n_paths is the number of
/// paths per base point. Samples are per-base-point means.
IbpReport free_ibp(const SdeSystem& system, const CylFunctional& F, const VectorFieldProcess& hfield, double T,
                   std::size_t n_base_points, const McConfig& mc);
IbpReport free_damped_ibp(const SdeSystem& system, const CylFunctional& F, const VectorFieldProcess& hfield,
                          double T, std::size_t n_base_points, const McConfig& mc);

}  // namespace ibplab
