#include <cmath>
#include <numbers>

#include "doctest.h"
#include "srtube/experiments.hpp"
#include "srtube/weyl_expansion.hpp"

using namespace srtube;
using std::numbers::pi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

TubeSpec line_spec(double theta) {
  return TubeSpec(SRStructure::heisenberg(1),
                  curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, theta, 1.0)));
}

}  // namespace

TEST_CASE("Weyl coefficients of a Euclidean circle") {
  const double R = 1.5;
  const TubeSpec spec(SRStructure::euclidean(3), presets::circle(R));
  const WeylExpansion w = weyl_coefficients(spec, 5, 0.5);
  REQUIRE(w.k.size() == 4);
  CHECK(w.k.front() == 2);
  CHECK(w.c[0] == doctest::Approx(2 * pi * pi * R).epsilon(1e-8));
  for (size_t i = 1; i < w.c.size(); ++i) CHECK(std::abs(w.c[i]) < 1e-7);
  CHECK(w.odd[1]);
  CHECK_FALSE(w.odd[2]);
}

TEST_CASE("Steiner coefficients of a sphere") {
  const double R = 1.0;
  const TubeSpec spec(SRStructure::euclidean(3), presets::sphere(R));
  const WeylExpansion s = steiner_coefficients(spec, 4, 0.5, 1);
  const double exact[] = {4 * pi * R * R, 4 * pi * R, 4 * pi / 3, 0.0};
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(std::abs(s.c[i] - exact[i]) < 1e-6 * 4 * pi);
  }
  // Inner side: 4 pi R^2 r - 4 pi R r^2 + 4 pi / 3 r^3.
  const WeylExpansion in = steiner_coefficients(spec, 3, 0.5, -1);
  CHECK(in.c[1] == doctest::Approx(-4 * pi * R).epsilon(1e-6));
}

TEST_CASE("Heisenberg z-axis: the tube is a round cylinder") {
  const TubeSpec spec(SRStructure::heisenberg(1), presets::segment_z(3, 1.0));
  const WeylExpansion w = weyl_coefficients(spec, 5, 0.5);
  CHECK(w.c[0] == doctest::Approx(pi).epsilon(1e-8));
  for (size_t i = 1; i < w.c.size(); ++i) CHECK(std::abs(w.c[i]) < 1e-6);
}

TEST_CASE("odd Weyl coefficients of a Heisenberg line vanish") {
  const WeylExpansion w = weyl_coefficients(line_spec(0.6), 5, 0.4);
  CHECK(w.c[0] > 0.0);
  CHECK(w.parity_max() < 1e-6 * w.c[0]);
}

TEST_CASE("truncated expansion fits the volume curve") {
  const TubeSpec spec = line_spec(0.6);
  const WeylExpansion w = weyl_coefficients(spec, 4, 0.4);
  // V(r) - c_2 r^2 ~ c_4 r^4: log-log slope close to 4.
  const double r1 = 0.04, r2 = 0.08;
  const double e1 = tube_volume(spec, r1) - w.c[0] * r1 * r1;
  const double e2 = tube_volume(spec, r2) - w.c[0] * r2 * r2;
  REQUIRE(e1 * e2 > 0.0);
  const double slope = std::log(e2 / e1) / std::log(r2 / r1);
  CHECK(slope == doctest::Approx(4.0).epsilon(0.02));
  const double series = w.c[0] * r2 * r2 + w.c[2] * std::pow(r2, 4);
  CHECK(std::abs(tube_volume(spec, r2) - series) < 1e-3 * std::abs(e2));
}

TEST_CASE("iterated divergence of the distance to a sphere") {
  const SRStructure e = SRStructure::euclidean(3);
  const ScalarField delta = [](const Vec& q) { return q.norm() - 1.0; };
  const Vec q = v3(0.9, 0.5, -0.7);
  const double s = q.norm();
  const DivergenceStack rec = iterated_divergence(e, delta, 0, q, 3);
  // div^1 = 2/s and div^{k+1} = div^1 div^k + d/ds div^k: div^2 = 2/s^2, div^3 = 0.
  CHECK(rec.values[0] == doctest::Approx(1.0));
  CHECK(rec.values[1] == doctest::Approx(2 / s).epsilon(1e-9));
  CHECK(rec.values[2] == doctest::Approx(2 / (s * s)).epsilon(1e-8));
  // div^3 nests three difference quotients at step ~3e-3: noise is ~1e-5.
  CHECK(std::abs(rec.values[3]) < 5e-5);
  const DivergenceStack flux = iterated_divergence_flux(e, delta, 0, q, 2);
  for (int k = 0; k <= 2; ++k) {
    CAPTURE(k);
    CHECK(std::abs(rec.values[k] - flux.values[k]) <
          1e-6 * std::max(1.0, std::abs(rec.values[k])));
  }
}

TEST_CASE("F invariants of the distance to the Heisenberg z-axis") {
  const SRStructure h = SRStructure::heisenberg(1);
  const ScalarField delta = [](const Vec& q) { return std::hypot(q[0], q[1]); };
  std::vector<Vec> pts = {v3(0.3, 0.1, 0.0), v3(-0.2, 0.25, 0.4), v3(0.05, -0.4, -1.0)};
  CHECK(check_F5_identity(h, delta, pts) < 1e-5);
  for (const Vec& q : pts) {
    const FInvariants a = heisenberg_F_invariants(h, delta, q, 0.0);
    const FInvariants b = heisenberg_F_invariants(h, delta, q, 1.1);
    CHECK(a.F1 == doctest::Approx(b.F1).epsilon(1e-8));
    CHECK(a.F2 == doctest::Approx(b.F2).epsilon(1e-8));
    CHECK(a.F5 == doctest::Approx(b.F5).epsilon(1e-8));
  }
}

TEST_CASE("w-limit of the divergences agrees with the Theta ratios") {
  const TubeSpec spec(SRStructure::euclidean(3), presets::circle(1.0));
  const ScalarField delta = closed_form_delta(spec);
  Vec u(2);
  u << std::cos(0.8), std::sin(0.8);
  for (int j : {1, 2}) {
    CAPTURE(j);
    const WLimit l = w_limit(spec, delta, v1(0.7), u, j, 0.5);
    const double w = w_function(spec, v1(0.7), u, j, 0.5);
    CHECK(std::abs(l.limit - w) < 1e-4);
  }
  // Euclidean circle: Theta is linear in rho, so w_1 = <u, radial> / R and w_2 = 0.
  CHECK(std::abs(w_function(spec, v1(0.7), u, 2, 0.5)) < 1e-7);
  const double w1 = std::abs(w_function(spec, v1(0.7), u, 1, 0.5));
  CHECK(std::min(std::abs(w1 - std::abs(u[0])), std::abs(w1 - std::abs(u[1]))) < 1e-7);
}

TEST_CASE("Theta derivatives report vanishing low orders") {
  const TubeSpec spec = line_spec(0.6);
  Vec u(2);
  u << 1.0, 0.0;
  const ThetaDerivatives t = theta_derivatives(spec, v1(0.5), u, 3, 0.4);
  REQUIRE(t.theta.size() == 4);
  CHECK(t.theta[0] > 0.0);
  for (double s : t.spread) CHECK(s >= 0.0);
}

TEST_CASE("Theta of the outward sphere is (1 + rho)^2") {
  const TubeSpec spec(SRStructure::euclidean(3), presets::sphere(1.0));
  Vec x(2);
  x << 1.1, 2.0;
  const ThetaDerivatives t = theta_derivatives(spec, x, Vec::Constant(1, 1.0), 3, 0.5);
  // Theta in the (polar, azimuth) chart carries the area factor sin(polar).
  const double s = std::sin(1.1);
  const double exact[] = {s, 2 * s, 2 * s, 0.0};
  for (int j = 0; j <= 3; ++j) {
    CAPTURE(j);
    CHECK(std::abs(t.theta[j] - exact[j]) < 1e-7);
  }
  CHECK(w_function(spec, x, Vec::Constant(1, 1.0), 0, 0.5) == doctest::Approx(1.0));
  CHECK(w_function(spec, x, Vec::Constant(1, 1.0), 1, 0.5) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("flat model cases: a point in the plane and a square in space") {
  Vec origin = Vec::Zero(2);
  const TubeSpec disk(SRStructure::euclidean(2), presets::point(origin));
  const WeylExpansion d = weyl_coefficients(disk, 4, 0.5);
  CHECK(d.c[0] == doctest::Approx(pi).epsilon(1e-10));
  CHECK(std::abs(d.c[2]) < 1e-8);

  const TubeSpec square(SRStructure::euclidean(3), presets::graph2d({0.0}, 0.5));
  const WeylExpansion s = steiner_coefficients(square, 3, 0.5, 1);
  CHECK(s.c[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(s.c[1]) < 1e-8);
  CHECK(std::abs(s.c[2]) < 1e-8);
}

TEST_CASE("Steiner c_1 of a Heisenberg vertical plane is the slope of the half-tube volume") {
  const TubeSpec plane(SRStructure::heisenberg(1), presets::vertical_plane(1.0));
  const WeylExpansion s = steiner_coefficients(plane, 3, 0.5, 1);
  // V = c1 h + c2 h^2 + O(h^3): (4 V(h) - V(2h)) / (2h) = c1 + O(h^2).
  const double h = 1e-3;
  const double slope =
      (4 * half_tube_volume(plane, h, 1) - half_tube_volume(plane, 2 * h, 1)) / (2 * h);
  CHECK(s.c[0] > 0.0);
  CHECK(slope == doctest::Approx(s.c[0]).epsilon(1e-5));
}

TEST_CASE("divergences of flat and radial distance functions") {
  const SRStructure e = SRStructure::euclidean(3);
  const ScalarField radial = [](const Vec& q) { return q.norm(); };
  // Against mu / delta^2 the curvature of the level spheres cancels.
  CHECK(std::abs(iterated_divergence(e, radial, 2, v3(0.3, -0.8, 0.6), 1).values[1]) < 1e-8);
  const ScalarField slab = [](const Vec& q) { return std::abs(q[2]); };
  CHECK(std::abs(iterated_divergence(e, slab, 0, v3(0.3, 0.2, 0.7), 2).values[1]) < 1e-8);
  const ScalarField shell = [](const Vec& q) { return q.norm() - 1.0; };
  const DivergenceStack d = iterated_divergence(e, shell, 0, v3(1.5, 0.0, 0.0), 2);
  CHECK(d.values[1] == doctest::Approx(2 / 1.5).epsilon(1e-9));
  CHECK(d.values[2] == doctest::Approx(2 / 2.25).epsilon(1e-8));
}

TEST_CASE("F invariants of the planar radius") {
  const SRStructure h = SRStructure::heisenberg(1);
  const ScalarField delta = [](const Vec& q) { return std::hypot(q[0], q[1]); };
  const FInvariants f = heisenberg_F_invariants(h, delta, v3(1.0, 0.0, 0.0));
  CHECK(f.F1 == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(f.F3) < 1e-10);
  CHECK(std::abs(f.F4) < 1e-8);
}

TEST_CASE("remainder of the truncated expansion") {
  const TubeSpec spec = line_spec(0.6);
  const double r0 = 0.4;
  const WeylExpansion w = weyl_coefficients(spec, 4, r0);
  auto remainder = [&](double r) {
    double s = 0.0;
    for (size_t i = 0; i < w.k.size(); ++i) s += w.c[i] * std::pow(r, w.k[i]);
    return std::abs(tube_volume(spec, r) - s);
  };
  const double a = 0.02 * r0, b = 0.2 * r0;
  const double slope = std::log(remainder(b) / remainder(a)) / std::log(b / a);
  CAPTURE(remainder(a));
  CAPTURE(remainder(b));
  CHECK(slope >= 4.8);
}
