#include <cmath>
#include <numbers>

#include "doctest.h"
#include "srtube/experiments.hpp"
#include "srtube/tube_engine.hpp"

using namespace srtube;
using std::numbers::pi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

TubeSpec circle_spec(double R) { return TubeSpec(SRStructure::euclidean(3), presets::circle(R)); }

TubeSpec line_spec(double theta) {
  return TubeSpec(SRStructure::heisenberg(1),
                  curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, theta, 1.0)));
}

}  // namespace

TEST_CASE("circle tube volume matches Pappus") {
  const TubeSpec spec = circle_spec(1.5);
  for (double r : {0.05, 0.3, 0.8}) {
    CAPTURE(r);
    const double exact = 2 * pi * pi * 1.5 * r * r;
    CHECK(tube_volume(spec, r) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("outward half tube of a sphere is a spherical shell") {
  const TubeSpec spec(SRStructure::euclidean(3), presets::sphere(1.0));
  for (double r : {0.1, 0.5}) {
    const double exact = 4 * pi / 3 * (std::pow(1 + r, 3) - 1);
    CHECK(half_tube_volume(spec, r, 1) == doctest::Approx(exact).epsilon(1e-9));
    const double inner = 4 * pi / 3 * (1 - std::pow(1 - r, 3));
    CHECK(half_tube_volume(spec, r, -1) == doctest::Approx(inner).epsilon(1e-9));
  }
}

TEST_CASE("volume does not depend on the parametrization") {
  const double R = 1.2;
  // phi(t) = t + 0.3 sin t is a diffeomorphism of the circle.
  EmbeddedPatch re(3, v1(0.0), v1(2 * pi), [R](const Vec& x) {
    const double a = x[0] + 0.3 * std::sin(x[0]);
    Vec q(3);
    q << R * std::cos(a), R * std::sin(a), 0.0;
    return q;
  });
  re.set_periodic(0);
  const TubeSpec a = circle_spec(R);
  QuadratureSettings fine;
  fine.nodes_x = 24;
  const TubeSpec b(SRStructure::euclidean(3), re, ODESettings{}, fine);
  for (double r : {0.1, 0.4}) {
    CHECK(tube_volume(b, r) == doctest::Approx(tube_volume(a, r)).epsilon(1e-7));
  }
  // Same check for a Heisenberg line walked at non-uniform speed.
  const EmbeddedPatch line =
      curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, 0.6, 1.0));
  const EmbeddedPatch slow(3, v1(0.0), v1(1.0),
                           [line](const Vec& x) { return line.embed(v1(x[0] * x[0])); });
  QuadratureSettings q;
  q.nodes_x = 16;
  const TubeSpec la(SRStructure::heisenberg(1), line), lb(SRStructure::heisenberg(1), slow,
                                                          ODESettings{}, q);
  CHECK(tube_volume(lb, 0.2) == doctest::Approx(tube_volume(la, 0.2)).epsilon(1e-7));
}

TEST_CASE("tube volume grows with the radius") {
  const TubeSpec spec = line_spec(0.6);
  const VolumeCurve c = volume_curve(spec, {0.05, 0.1, 0.15, 0.2, 0.25, 0.3});
  for (size_t i = 1; i < c.volumes.size(); ++i) CHECK(c.volumes[i] > c.volumes[i - 1]);
  CHECK(c.volumes[0] > 0.0);
  CHECK_FALSE(c.fingerprint.empty());
}

TEST_CASE("refining the quadrature changes the volume very little") {
  const TubeSpec base = line_spec(0.6);
  TubeSpec fine = base;
  fine.quad = base.quad.scaled(2.0);
  const double a = tube_volume(base, 0.3), b = tube_volume(fine, 0.3);
  CHECK(std::abs(a - b) < 1e-8 * b);
}

TEST_CASE("variational and finite-difference jacobians agree") {
  const TubeSpec spec = line_spec(0.6);
  Vec u(2);
  u << std::cos(0.7), std::sin(0.7);
  for (double rho : {0.1, 0.4}) {
    CAPTURE(rho);
    const double a = radial_jacobian(spec, v1(0.4), u, rho);
    const double b = radial_jacobian_fd(spec, v1(0.4), u, rho);
    CHECK(std::abs(a - b) < 1e-6 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("Euclidean jacobian of the circle tube") {
  // J(t, u) = rho^2 (R + rho <u, radial>): linear in u, so J(u) + J(-u) = 2 rho^2 R.
  const double R = 2.0, rho = 0.3;
  const TubeSpec spec = circle_spec(R);
  Vec u(2);
  u << 0.6, 0.8;
  const double a = std::abs(radial_jacobian(spec, v1(1.0), u, rho));
  const double b = std::abs(radial_jacobian(spec, v1(1.0), -u, rho));
  CHECK(a + b == doctest::Approx(2 * rho * rho * R).epsilon(1e-10));
  CHECK(std::abs(a - b) <= 2 * std::pow(rho, 3) + 1e-12);
}

TEST_CASE("injectivity estimate of the circle sees the focal radius") {
  const InjectivityEstimate e = injectivity_radius_estimate(circle_spec(1.0), 1.5);
  CHECK(e.certified);
  CHECK(e.failure_radius <= 1.0 + 1.5 / 48 + 1e-12);
  CHECK(e.failure_radius > 0.9);
  CHECK(e.radius == doctest::Approx(0.9 * e.failure_radius));
}

TEST_CASE("uncertified injectivity estimate when no failure is seen") {
  const InjectivityEstimate e = injectivity_radius_estimate(line_spec(0.6), 0.5);
  CHECK_FALSE(e.certified);
  CHECK(e.reason == "none");
  CHECK(e.radius == doctest::Approx(0.45));
}

TEST_CASE("inverting the normal exponential recovers the base point and covector") {
  const TubeSpec spec = line_spec(0.6);
  const Vec x = v1(0.35);
  for (double ang : {0.3, 2.5, 4.4}) {
    CAPTURE(ang);
    Vec p(2);
    p << 0.2 * std::cos(ang), 0.2 * std::sin(ang);
    const Vec q = normal_exponential(spec, x, p);
    const InverseResult inv = invert_exponential(spec, q, spec.ode);
    CHECK(inv.residual < 1e-10);
    CHECK((inv.x - x).norm() < 1e-8);
    CHECK((inv.p - p).norm() < 1e-8);
    CHECK(distance_from_patch(spec, q, spec.ode) == doctest::Approx(0.2).epsilon(1e-9));
  }
}

TEST_CASE("Monte-Carlo volume agrees with quadrature") {
  const TubeSpec spec = circle_spec(1.0);
  const MonteCarloResult mc = monte_carlo_tube_volume(spec, 0.3, 200000, 7);
  const double q = tube_volume(spec, 0.3);
  CHECK(std::abs(mc.value - q) < 4 * mc.stderr_);
  const MonteCarloResult again = monte_carlo_tube_volume(spec, 0.3, 200000, 7);
  CHECK(again.value == mc.value);
}

TEST_CASE("thread count does not change results") {
  TubeSpec a = line_spec(0.6), b = line_spec(0.6);
  a.quad.threads = 1;
  b.quad.threads = 4;
  CHECK(tube_volume(a, 0.25) == tube_volume(b, 0.25));
}

TEST_CASE("invalid tube inputs") {
  const TubeSpec spec = circle_spec(1.0);
  CHECK_THROWS_AS(tube_volume(spec, -0.1), InvalidInput);
  CHECK_THROWS_AS(half_tube_volume(spec, 0.1), InvalidInput);
  QuadratureSettings bad;
  bad.nodes_sphere = 3;
  CHECK_THROWS_AS(TubeSpec(SRStructure::euclidean(3), presets::circle(1.0), ODESettings{}, bad),
                  InvalidInput);
}

TEST_CASE("normal exponential: closed-form geodesics") {
  const TubeSpec circle = circle_spec(1.0);
  CHECK((normal_exponential(circle, v1(0.0), Vec::Zero(2)) - circle.patch().embed(v1(0.0)))
            .norm() == 0.0);
  Vec p(2);
  p << 0.3, 0.0;
  const Vec q = normal_exponential(circle, v1(0.0), p);
  CHECK(circle.patch().distance(q) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK((q - circle.patch().embed(v1(0.0))).norm() == doctest::Approx(0.3).epsilon(1e-10));

  // Geodesics leaving the Heisenberg z-axis stay in the plane z = z0.
  const TubeSpec axis(SRStructure::heisenberg(1), presets::segment_z(3, 1.0));
  const Vec a = normal_exponential(axis, v1(0.4), p);
  CHECK(a[2] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::hypot(a[0], a[1]) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("radial jacobian vanishes at rho = 0") {
  Vec u(2);
  u << 0.6, 0.8;
  CHECK(radial_jacobian(line_spec(0.6), v1(0.3), u, 0.0) == 0.0);
}

TEST_CASE("volumes at r = 0 and the z-axis cylinder") {
  const TubeSpec axis(SRStructure::heisenberg(1), presets::segment_z(3, 1.0));
  CHECK(tube_volume(axis, 0.0) == 0.0);
  CHECK(tube_volume(axis, 0.3) == doctest::Approx(pi * 0.09).epsilon(1e-9));
  const TubeSpec sphere(SRStructure::euclidean(3), presets::sphere(1.0));
  CHECK(half_tube_volume(sphere, 0.0, 1) == 0.0);
  CHECK(half_tube_volume(sphere, 0.1, 1) == doctest::Approx(1.38649).epsilon(1e-5));
}

TEST_CASE("the two half tubes make up the tube") {
  const TubeSpec sphere(SRStructure::euclidean(3), presets::sphere(1.0));
  for (double r : {0.1, 0.4}) {
    CHECK(half_tube_volume(sphere, r, 1) + half_tube_volume(sphere, r, -1) ==
          doctest::Approx(tube_volume(sphere, r)).epsilon(1e-12));
  }
}

TEST_CASE("injectivity estimates of the sphere and the z-axis") {
  const InjectivityEstimate s =
      injectivity_radius_estimate(TubeSpec(SRStructure::euclidean(3), presets::sphere(1.0)), 1.5);
  CHECK(s.certified);
  CHECK(s.radius == doctest::Approx(0.9).epsilon(0.04));
  const InjectivityEstimate z = injectivity_radius_estimate(
      TubeSpec(SRStructure::heisenberg(1), presets::segment_z(3, 1.0)), 1.0);
  CHECK(z.radius >= 0.2);
}

TEST_CASE("inversion of points on the patch and near the z-axis") {
  const TubeSpec line = line_spec(0.6);
  const InverseResult on = invert_exponential(line, line.patch().embed(v1(0.3)), line.ode);
  CHECK(on.x[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(on.p.norm() < 1e-9);

  const TubeSpec axis(SRStructure::heisenberg(1), presets::segment_z(3, 1.0));
  Vec q(3);
  q << 0.1, 0.0, 0.5;
  const InverseResult inv = invert_exponential(axis, q, axis.ode);
  CHECK(inv.p.norm() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(inv.x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(eikonal_residual(axis, q, axis.ode) < 1e-6);
}

TEST_CASE("eikonal residuals") {
  const TubeSpec circle = circle_spec(1.0);
  Vec q(3);
  q << 1.2, 0.0, 0.0;
  CHECK(eikonal_residual(circle, q, circle.ode) < 1e-6);
  const TubeSpec line = line_spec(0.6);
  Vec p(2);
  p << 0.12, -0.05;
  CHECK(eikonal_residual(line, normal_exponential(line, v1(0.5), p), line.ode) < 1e-5);
}

TEST_CASE("Monte-Carlo volume of a spherical shell") {
  const TubeSpec sphere(SRStructure::euclidean(3), presets::sphere(1.0));
  const MonteCarloResult mc = monte_carlo_tube_volume(sphere, 0.1, 1000000, 3, 1);
  CHECK(std::abs(mc.value - 1.3865) < 0.004);
  CHECK(std::abs(mc.value - 4 * pi / 3 * 0.331) < 4 * mc.stderr_);
}
