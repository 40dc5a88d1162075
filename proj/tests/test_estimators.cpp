#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ibplab/error.hpp"
#include "ibplab/estimators.hpp"

using namespace ibplab;

namespace {

const PointOnM kOrigin{Vec::Zero()};
const TangentVec kE1{Vec::Zero(), Vec(1, 0, 0)};
const PointOnM kEquator{Vec(1, 0, 0)};
const TangentVec kUp{Vec(1, 0, 0), Vec(0, 0, 1)};
const CylFunctional kX = CylFunctional::coord(0, 1.0);
const CylFunctional kZ = CylFunctional::coord(2, 1.0);

McConfig config(std::size_t n, std::uint64_t seed = 3, int steps = 128) {
  McConfig mc;
  mc.n_paths = n;
  mc.steps_per_unit = steps;
  mc.seed = seed;
  return mc;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ibplab::Error");
  return Errc::InvalidArgument;
}

bool within(const GradientEstimate& g, double expected, double k = 3.0) {
  return std::abs(g.value - expected) <= k * g.std_error;
}

}  // namespace

TEST_CASE("gradient family on the Gaussian oracle") {
  const auto bm = SdeSystem::euclidean_bm(1);
  const auto mc = config(20000);
  const auto bel = bismut_gradient(bm, kOrigin, kE1, kX, 1.0, mc);
  CHECK(within(bel, 1.0));
  CHECK(bel.n_paths == 20000);
  CHECK(within(thalmaier_gradient(bm, kOrigin, kE1, kX, 1.0, 0.5, 0.5, mc), 1.0));
  CHECK(within(psi_weighted_gradient(bm, kOrigin, kE1, kX, 1.0, WeightFunction::linear(), mc), 1.0));
  CHECK(within(bismut_gradient(bm, kOrigin, kE1, CylFunctional::constant(2.0, 1.0), 1.0, mc), 0.0));

  const auto ou = SdeSystem::euclidean_ou(1);
  const auto g = bismut_gradient(ou, kOrigin, kE1, kX, 1.0, config(20000, 3, 512));
  CHECK(std::abs(g.value - std::exp(-1.0)) <= 3.0 * g.std_error + 5e-3);
}

TEST_CASE("estimators that coincide by definition agree path by path") {
  const auto sphere = SdeSystem::sphere2_bm();
  const auto mc = config(500);
  const auto full_window = compare_gradients(sphere, kEquator, kUp, kZ, 1.0, GradientMethod::thalmaier(0.0, 1.0),
                                             GradientMethod::bismut(), mc);
  CHECK(full_window.diff == 0.0);
  CHECK(full_window.diff_se == 0.0);
  CHECK(full_window.z == 0.0);

  const auto flat = compare_gradients(sphere, kEquator, kUp, kZ, 1.0,
                                      GradientMethod::psi_weighted(WeightFunction::constant(1.0)),
                                      GradientMethod::bismut(), mc);
  CHECK(flat.diff_se == 0.0);

  const auto window = compare_gradients(sphere, kEquator, kUp, kZ, 1.0,
                                        GradientMethod::psi_weighted(WeightFunction::parse("window:0.25,0.5")),
                                        GradientMethod::thalmaier(0.25, 0.5), mc);
  CHECK(window.diff_se == 0.0);
  CHECK(window.lhs == window.rhs);
}

TEST_CASE("gradient preconditions") {
  const auto sphere = SdeSystem::sphere2_bm();
  const auto mc = config(10);
  CHECK(code_of([&] { thalmaier_gradient(sphere, kEquator, kUp, kZ, 1.0, 0.75, 0.5, mc); }) == Errc::BadWindow);
  CHECK(code_of([&] { thalmaier_gradient(sphere, kEquator, kUp, kZ, 1.0, 0.2, 0.0, mc); }) == Errc::BadWindow);
  CHECK(code_of([&] { thalmaier_gradient(sphere, kEquator, kUp, kZ, 1.0, 0.3, 0.5, mc); }) == Errc::BadWindow);
  CHECK(code_of([&] {
          psi_weighted_gradient(sphere, kEquator, kUp, kZ, 1.0, WeightFunction::constant(0.0), mc);
        }) == Errc::DegenerateWeight);
  CHECK(code_of([&] { crn_fd_gradient(sphere, kEquator, kUp, kZ, 1.0, 1e-6, mc); }) == Errc::RangeError);
  const TangentVec normal{kEquator.coords, Vec(1, 0, 0)};
  CHECK(code_of([&] { bismut_gradient(sphere, kEquator, normal, kZ, 1.0, mc); }) == Errc::InvalidArgument);
  CHECK(code_of([&] { bismut_gradient(sphere, PointOnM{Vec(2, 0, 0)}, kUp, kZ, 1.0, mc); }) == Errc::InvalidArgument);

  // Trapezoid fallback for weights without a closed form.
  WeightFunction bump{"bump", [](double s) { return s * (1.0 - s); }, {}};
  CHECK(bump.integral(TimeGrid(1.0, 512)) == doctest::Approx(1.0 / 6.0).epsilon(1e-5));
}

TEST_CASE("lemma identity") {
  const auto bm = SdeSystem::euclidean_bm(1);
  const auto mc = config(20000);
  const auto exact = lemma21_integrated_check(bm, kOrigin, kX, CmProcess::linear(Vec(1, 0, 0)), 0.5, 1.0, mc);
  CHECK(exact.diff == 0.0);
  CHECK(exact.z == 0.0);
  CHECK(exact.passes(4.0));

  const auto quad = lemma21_integrated_check(bm, kOrigin, kX, CmProcess::quadratic(Vec(1, 0, 0)), 1.0, 1.0, mc);
  CHECK(quad.z <= 4.0);
  CHECK(std::abs(quad.lhs - 1.0) <= 4.0 * quad.lhs_se);

  const auto h = CmProcess::quadratic(Vec(1, 0, 0));
  CHECK(code_of([&] { lemma21_integrated_check(bm, kOrigin, kX, h, 0.0, 1.0, mc); }) == Errc::BadWindow);
  CHECK(code_of([&] { lemma21_integrated_check(bm, kOrigin, kX, h, 1.5, 1.0, mc); }) == Errc::BadWindow);
  CHECK(code_of([&] { lemma21_integrated_check(bm, kOrigin, kX, h, 0.3, 1.0, mc); }) == Errc::BadWindow);
}

TEST_CASE("function and path-space identities") {
  const auto bm = SdeSystem::euclidean_bm(1);
  const auto sphere = SdeSystem::sphere2_bm();
  const auto mc = config(20000);
  const auto h = CmProcess::linear(Vec(1, 0, 0));

  const auto zero = function_ibp_check(sphere, kEquator, kZ, CmProcess::zero(), 1.0, config(200));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  const auto gauss = function_ibp_check(bm, kOrigin, kX, h, 1.0, mc);
  CHECK(gauss.rhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(gauss.lhs - 1.0) <= 4.0 * gauss.lhs_se);
  CHECK(gauss.z <= 4.0);

  // k = 1 reproduces the function identity sample for sample.
  const auto small = config(300);
  const auto up = CmProcess::linear(Vec(0, 0, 1));
  const auto fn = function_ibp_check(sphere, kEquator, kZ, up, 1.0, small);
  const auto ps = pathspace_ibp(sphere, kEquator, kZ, up, 1.0, small);
  CHECK(fn.lhs == ps.rhs);
  CHECK(fn.rhs == ps.lhs);

  const auto constant = pathspace_ibp(sphere, kEquator, CylFunctional::constant(1.0, 1.0), up, 1.0, mc);
  CHECK(constant.lhs == 0.0);
  CHECK(constant.lhs_se == 0.0);
  CHECK(std::abs(constant.rhs) <= 4.0 * constant.rhs_se);

  CHECK(code_of([&] {
          pathspace_ibp(bm, kOrigin, kX, CmProcess::linear(Vec(1, 0, 0), Vec(1, 0, 0)), 1.0, small);
        }) == Errc::InvalidArgument);
}

TEST_CASE("damped identity") {
  const auto bm = SdeSystem::euclidean_bm(1);
  const auto h = CmProcess::linear(Vec(1, 0, 0));
  const auto flat = damped_ibp(bm, kOrigin, kX, h, 1.0, config(20000));
  CHECK(flat.lhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(flat.rhs - 1.0) <= 4.0 * flat.rhs_se);

  // Flat space: the damped identity is the path-space identity with D = I.
  const auto small = config(300);
  const auto plain = pathspace_ibp(bm, kOrigin, CylFunctional::pairdot(0.5, 1.0), CmProcess::quadratic(Vec(1, 0, 0)),
                                   1.0, small);
  const auto damped = damped_ibp(bm, kOrigin, CylFunctional::pairdot(0.5, 1.0), CmProcess::quadratic(Vec(1, 0, 0)),
                                 1.0, small);
  CHECK(damped.lhs == doctest::Approx(plain.lhs).epsilon(1e-12));
  CHECK(damped.rhs == doctest::Approx(plain.rhs).epsilon(1e-12));

  const auto sphere = SdeSystem::sphere2_bm();
  const auto zero = damped_ibp(sphere, kEquator, kZ, CmProcess::zero(), 1.0, config(100));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  CHECK(code_of([&] { damped_ibp(SdeSystem::euclidean_scaled(1, 2.0), kOrigin, kX, h, 1.0, small); }) ==
        Errc::NotGradientSystem);
}

TEST_CASE("girsanov identities") {
  const auto bm = SdeSystem::euclidean_bm(1);
  const auto sphere = SdeSystem::sphere2_bm();
  const auto h = CmProcess::linear(Vec(1, 0, 0));
  const auto mc = config(20000);

  const auto still = girsanov_invariance(sphere, kEquator, kZ, CmProcess::linear(Vec(0, 0, 1)), 0.0, 1.0, config(300));
  CHECK(still.diff == 0.0);
  CHECK(still.diff_se == 0.0);

  const auto shift = girsanov_invariance(bm, kOrigin, kX, h, 0.1, 1.0, mc);
  CHECK(std::abs(shift.lhs - 0.1) <= 4.0 * shift.lhs_se);
  CHECK(std::abs(shift.rhs - 0.1) <= 4.0 * shift.rhs_se);
  CHECK(shift.z <= 4.0);

  const auto mart = girsanov_martingale(bm, kOrigin, h, 0.1, 1.0, mc);
  CHECK(std::abs(mart.lhs - 1.0) <= 4.0 * mart.lhs_se);

  const auto deriv = girsanov_derivative(bm, kOrigin, kX, h, 1.0, mc);
  CHECK(deriv.direct.lhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(deriv.direct.lhs_se <= 1e-12);
  CHECK(std::abs(deriv.direct.rhs - 1.0) <= 4.0 * deriv.direct.rhs_se);
  CHECK(deriv.fd.lhs == doctest::Approx(1.0).epsilon(1e-9));

  const auto none = girsanov_derivative(sphere, kEquator, kZ, CmProcess::zero(), 1.0, config(50));
  CHECK(none.direct.lhs == 0.0);
  CHECK(none.fd.lhs == 0.0);
  CHECK(none.direct.rhs == 0.0);

  CHECK(code_of([&] { girsanov_invariance(bm, kOrigin, kX, h, 0.6, 1.0, mc); }) == Errc::RangeError);
  CHECK(code_of([&] {
          girsanov_invariance(bm, kOrigin, kX, CmProcess::occupation(Vec(1, 0, 0), 0), 0.1, 1.0, mc);
        }) == Errc::InvalidArgument);
}

TEST_CASE("free path space") {
  const auto sphere = SdeSystem::sphere2_bm();
  const auto mc = config(64, 9, 256);
  const auto zero = free_ibp(sphere, kZ, VectorFieldProcess::zero(), 1.0, 16, mc);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.n_paths == 16 * 64);

  const auto killing = free_ibp(sphere, kZ, VectorFieldProcess::killing(Vec(1, 0, 0)), 1.0, 64, mc);
  CHECK(killing.rhs == 0.0);
  CHECK(std::abs(killing.lhs) <= 4.0 * killing.lhs_se);

  const auto damped_zero = free_damped_ibp(sphere, kZ, VectorFieldProcess::zero(), 1.0, 8, mc);
  CHECK(damped_zero.lhs == 0.0);

  const auto flat = SdeSystem::euclidean_bm(2);
  CHECK(code_of([&] { free_ibp(flat, kX, VectorFieldProcess::zero(), 1.0, 8, mc); }) == Errc::UnboundedVolume);
  CHECK(code_of([&] { free_damped_ibp(flat, kX, VectorFieldProcess::zero(), 1.0, 8, mc); }) ==
        Errc::UnboundedVolume);
}

TEST_CASE("a corrupted right-hand side is detected") {
  auto mc = config(20000);
  mc.debug_rhs_scale = 1.1;
  const auto r = function_ibp_check(SdeSystem::euclidean_bm(1), kOrigin, kX, CmProcess::linear(Vec(1, 0, 0)), 1.0, mc);
  CHECK_FALSE(r.passes(4.0));
}
