#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ibplab/error.hpp"
#include "ibplab/geometry.hpp"

using namespace ibplab;

namespace {

const ManifoldSpec S2 = ManifoldSpec::sphere2();

Vec random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec v(n(rng), n(rng), n(rng));
  return v.normalized();
}

// Walks v along the great circle from a to b (both unit, orthogonal) in `steps` pieces.
Vec walk_great_circle(const Vec& a, const Vec& b, Vec v, int steps) {
  for (int i = 0; i < steps; ++i) {
    const double s0 = 0.5 * std::numbers::pi * i / steps;
    const double s1 = 0.5 * std::numbers::pi * (i + 1) / steps;
    const PointOnM from{std::cos(s0) * a + std::sin(s0) * b};
    const PointOnM to{std::cos(s1) * a + std::sin(s1) * b};
    v = transport_step(S2, from, to, TangentVec{from.coords, v}).coords;
  }
  return v;
}

}  // namespace

TEST_CASE("manifold strings") {
  CHECK(ManifoldSpec::parse("euclidean:2") == ManifoldSpec::euclidean(2));
  CHECK(ManifoldSpec::parse("circle") == ManifoldSpec::circle());
  CHECK(ManifoldSpec::parse("sphere2") == S2);
  CHECK(S2.ambient_dim() == 3);
  CHECK(S2.intrinsic_dim() == 2);
  CHECK(ManifoldSpec::circle().intrinsic_dim() == 1);
  CHECK(ManifoldSpec::euclidean(3).intrinsic_dim() == 3);
  CHECK_THROWS_AS(ManifoldSpec::parse("torus"), Error);
  CHECK_THROWS_AS(ManifoldSpec::parse("euclidean:0"), Error);
}

TEST_CASE("project_to_manifold") {
  const Vec e = project_to_manifold(ManifoldSpec::euclidean(2), Vec(3, 4, 0)).coords;
  CHECK(e == Vec(3, 4, 0));
  CHECK((project_to_manifold(S2, Vec(0, 0, 2)).coords - Vec(0, 0, 1)).norm() == doctest::Approx(0.0));
  const Vec p = project_to_manifold(S2, Vec(1, 1, 1)).coords;
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(0.5773502692).epsilon(1e-10));
  try {
    project_to_manifold(S2, Vec::Zero());
    FAIL("expected ZeroVector");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::ZeroVector);
  }
}

TEST_CASE("tangent_project examples") {
  const PointOnM pole{Vec(0, 0, 1)};
  CHECK(tangent_project(S2, pole, Vec(1, 2, 3)).coords.isApprox(Vec(1, 2, 0)));
  CHECK(tangent_project(S2, PointOnM{Vec(1, 0, 0)}, Vec(5, 0, 0)).coords.norm() == 0.0);
  const auto R3 = ManifoldSpec::euclidean(3);
  CHECK(tangent_project(R3, PointOnM{Vec(0.3, -1, 2)}, Vec(1, 2, 3)).coords == Vec(1, 2, 3));
}

TEST_CASE("tangent projector is idempotent and self-adjoint") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = random_unit(rng);
    const Mat P = tangent_projector(S2, x);
    const Vec u(n(rng), n(rng), n(rng));
    const Vec w(n(rng), n(rng), n(rng));
    worst = std::max(worst, (P * (P * u) - P * u).norm());
    worst = std::max(worst, std::abs((P * u).dot(w) - u.dot(P * w)));
    worst = std::max(worst, std::abs((P * u).dot(x)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("ricci_sharp") {
  const PointOnM pole{Vec(0, 0, 1)};
  CHECK(ricci_sharp(S2, TangentVec{pole.coords, Vec(1, 2, 0)}).coords.isApprox(Vec(1, 2, 0)));
  CHECK(ricci_sharp(ManifoldSpec::euclidean(3), TangentVec{Vec(1, 1, 1), Vec(1, 2, 3)}).coords.norm() == 0.0);
  CHECK(ricci_sharp(ManifoldSpec::circle(), TangentVec{Vec(1, 0, 0), Vec(0, 1, 0)}).coords.norm() == 0.0);

  std::mt19937_64 rng(3);
  const Vec x = random_unit(rng);
  const Mat P = tangent_projector(S2, x);
  const Vec u = P * random_unit(rng);
  const Vec v = P * random_unit(rng);
  const Mat R = ricci_matrix(S2, x);
  CHECK((R * u).dot(v) == doctest::Approx(u.dot(R * v)).epsilon(1e-14));
  CHECK((R * (2.0 * u + 3.0 * v) - 2.0 * (R * u) - 3.0 * (R * v)).norm() <= 1e-14);
}

TEST_CASE("tangent frame is orthonormal and tangent") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_unit(rng);
    const Mat F = tangent_frame(S2, x);
    const Eigen::Matrix2d G = F.leftCols<2>().transpose() * F.leftCols<2>();
    CHECK((G - Eigen::Matrix2d::Identity()).norm() <= 1e-12);
    CHECK((F.leftCols<2>().transpose() * x).norm() <= 1e-12);
    CHECK(F.col(2).norm() == 0.0);
  }
}

TEST_CASE("transport_step") {
  const PointOnM x{Vec(0, 0, 1)};
  const TangentVec v{x.coords, Vec(0.3, -0.4, 0)};
  CHECK(transport_step(S2, x, x, v).coords.isApprox(v.coords));

  const auto R2 = ManifoldSpec::euclidean(2);
  const TangentVec w{Vec(1, 2, 0), Vec(-3, 5, 0)};
  CHECK(transport_step(R2, PointOnM{Vec(1, 2, 0)}, PointOnM{Vec(4, -1, 0)}, w).coords == w.coords);

  const PointOnM y = project_to_manifold(S2, Vec(0.05, 0.02, 1));
  const Vec moved = transport_step(S2, x, y, v).coords;
  CHECK(std::abs(moved.dot(y.coords)) <= 1e-14);
  CHECK(moved.norm() == doctest::Approx(v.coords.norm()).epsilon(1e-10));

  try {
    transport_step(S2, x, PointOnM{Vec(1, 0, 0)}, v);
    FAIL("expected StepTooLarge");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::StepTooLarge);
  }
}

TEST_CASE("holonomy of the octant triangle is a quarter turn") {
  const Vec north(0, 0, 1), east(1, 0, 0), west(0, 1, 0);
  const int steps = 10000;
  const Vec v0(1, 0, 0);
  Vec v = walk_great_circle(north, east, v0, steps);
  v = walk_great_circle(east, west, v, steps);
  v = walk_great_circle(west, north, v, steps);
  CHECK(std::abs(v.dot(north)) <= 1e-10);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
  // Signed angle from v0 to v about the outward normal.
  const double angle = std::atan2(north.dot(v0.cross(v)), v0.dot(v));
  CHECK(std::abs(std::abs(angle) - 0.5 * std::numbers::pi) <= 1e-3);
}

TEST_CASE("frame transport along a great circle preserves inner products") {
  const Vec a(1, 0, 0), b(0, 0, 1);
  for (int steps : {64, 256}) {
    Mat frame = tangent_frame(S2, a);
    Vec u = frame.col(0);
    Vec w = (frame.col(0) + frame.col(1)).normalized();
    const double before = u.dot(w);
    Vec prev = a;
    for (int i = 1; i <= steps; ++i) {
      const double s = 0.5 * std::numbers::pi * i / steps;
      const Vec next = std::cos(s) * a + std::sin(s) * b;
      frame = transport_frame(S2, frame, prev, next);
      u = transport_step(S2, PointOnM{prev}, PointOnM{next}, TangentVec{prev, u}).coords;
      w = transport_step(S2, PointOnM{prev}, PointOnM{next}, TangentVec{prev, w}).coords;
      prev = next;
    }
    const Eigen::Matrix2d G = frame.leftCols<2>().transpose() * frame.leftCols<2>();
    CHECK((G - Eigen::Matrix2d::Identity()).norm() <= 1e-12);
    CHECK(std::abs(u.dot(w) - before) <= 2.0 / steps);
  }
}

TEST_CASE("divergence") {
  const auto R3 = ManifoldSpec::euclidean(3);
  const PointOnM p{Vec(0.4, -1.2, 2.0)};
  CHECK(divergence(R3, fields::identity(R3), p, DivergenceMode::Analytic) == 3.0);
  CHECK(divergence(R3, fields::identity(R3), p, DivergenceMode::Numeric) == doctest::Approx(3.0).epsilon(1e-8));

  const auto killing = fields::rotation(Vec(0.2, 1.0, -0.5));
  const auto grad_z = fields::coordinate_gradient(S2, 2);
  CHECK(divergence(S2, grad_z, PointOnM{Vec(0, 0, 1)}, DivergenceMode::Analytic) == doctest::Approx(-2.0));
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const PointOnM x{random_unit(rng)};
    worst = std::max(worst, std::abs(divergence(S2, killing, x, DivergenceMode::Numeric)));
    const double exact = -2.0 * x.coords[2];
    worst = std::max(worst, std::abs(divergence(S2, grad_z, x, DivergenceMode::Analytic) - exact));
    worst = std::max(worst, std::abs(divergence(S2, grad_z, x, DivergenceMode::Numeric) - exact));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("volume and uniform sampling") {
  CHECK(riemannian_volume(S2) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(riemannian_volume(ManifoldSpec::circle()) == doctest::Approx(2.0 * std::numbers::pi));
  std::mt19937_64 rng(1);
  try {
    riemannian_volume(ManifoldSpec::euclidean(2));
    FAIL("expected UnboundedVolume");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::UnboundedVolume);
  }
  CHECK_THROWS_AS(uniform_sample(ManifoldSpec::euclidean(1), rng), Error);

  const int n = 1000000;
  double sum_z = 0.0;
  double sum_z2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec x = uniform_sample(S2, rng).coords;
    sum_z += x[2];
    sum_z2 += x[2] * x[2];
  }
  CHECK(std::abs(sum_z / n) <= 3.0 * std::sqrt(1.0 / 3.0) / 1000.0);
  CHECK(sum_z2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  const Vec c = uniform_sample(ManifoldSpec::circle(), rng).coords;
  CHECK(c.head<2>().norm() == doctest::Approx(1.0));
  CHECK(c[2] == 0.0);
}
