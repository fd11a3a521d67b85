#include <cmath>
#include <numbers>

#include "doctest.h"
#include "srtube/experiments.hpp"
#include "srtube/submanifold.hpp"

using namespace srtube;
using std::numbers::pi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Case {
  const char* name;
  SRStructure s;
  EmbeddedPatch p;
  std::vector<Vec> xs;
};

std::vector<Case> cases() {
  std::vector<Case> out;
  out.push_back({"circle", SRStructure::euclidean(3), presets::circle(1.3),
                 {v1(0.1), v1(2.0), v1(5.9)}});
  out.push_back({"sphere", SRStructure::euclidean(3), presets::sphere(1.0),
                 {v2(0.4, 0.3), v2(1.5, 4.0), v2(2.8, 6.0)}});
  out.push_back({"line", SRStructure::heisenberg(1),
                 curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, 0.6, 1.0)),
                 {v1(0.0), v1(0.5), v1(1.0)}});
  out.push_back({"helix", SRStructure::heisenberg(2),
                 curve_with_reeb_angle(make_curve_scenario(2, CurveFamily::Helix, 0.4, 1.0)),
                 {v1(0.1), v1(0.7)}});
  out.push_back({"graph", SRStructure::euclidean(3),
                 presets::graph2d({0.3, 0.0, 0.0, 0.5, 0.2, -0.4}, 0.3),
                 {v2(0.1, 0.2), v2(-0.25, 0.05)}});
  return out;
}

}  // namespace

TEST_CASE("annihilator frame kills the tangent space and is orthonormal") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    const AnnihilatorFrame f(c.s, c.p);
    for (const Vec& x : c.xs) {
      const Mat nu = f.sections(x);
      CHECK(nu.rows() == c.p.codim());
      CHECK((nu * c.p.tangent(x)).norm() < 1e-10);
      const Mat G = f.gram(x);
      CHECK((G - Mat::Identity(G.rows(), G.cols())).norm() < 1e-10);
    }
  }
}

TEST_CASE("section derivatives match differences of aligned sections") {
  for (const Case& c : cases()) {
    CAPTURE(c.name);
    const AnnihilatorFrame f(c.s, c.p);
    const Vec x = c.xs[0];
    const Mat& ref = f.reference_near(x);
    const std::vector<Mat> d = f.section_derivatives_aligned(x, ref);
    const double h = 1e-5;
    for (int j = 0; j < c.p.param_dim(); ++j) {
      Vec a = x, b = x;
      a[j] += h;
      b[j] -= h;
      const Mat fd = (f.sections_aligned(a, ref) - f.sections_aligned(b, ref)) / (2 * h);
      CHECK((d[j] - fd).norm() < 1e-6);
    }
  }
}

TEST_CASE("aligned frames vary continuously across reference nodes") {
  const SRStructure s = SRStructure::heisenberg(2);
  const EmbeddedPatch p =
      curve_with_reeb_angle(make_curve_scenario(2, CurveFamily::Helix, 0.5, 1.0));
  const AnnihilatorFrame f(s, p);
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double t = i / 400.0, h = 1.0 / 400.0;
    worst = std::max(worst, (f.sections(v1(t + h)) - f.sections(v1(t))).norm() / h);
  }
  // Bounded difference quotients: no frame flips between neighbouring nodes.
  CHECK(worst < 50.0);
}

TEST_CASE("co-oriented sphere frame points outward") {
  const AnnihilatorFrame f(SRStructure::euclidean(3), presets::sphere(2.0));
  for (const Vec& x : {v2(0.3, 0.2), v2(2.0, 5.0)}) {
    const Vec q = presets::sphere(2.0).embed(x);
    CHECK(f.sections(x).row(0).dot(q) > 0.0);
  }
}

TEST_CASE("Reeb angle of the constant-angle curves") {
  const SRStructure h = SRStructure::heisenberg(1);
  for (double theta : {0.2, 0.6, 1.0}) {
    const EmbeddedPatch line =
        curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, theta, 1.0));
    CHECK(reeb_angle(h, line, v1(0.4)) == doctest::Approx(theta).epsilon(1e-12));
  }
  const EmbeddedPatch helix =
      curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Helix, 0.6, 1.0, 0.5));
  CHECK(reeb_angle(h, helix, v1(0.3)) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("a curve in H_3 is non-characteristic exactly when its Reeb angle is positive") {
  const SRStructure h = SRStructure::heisenberg(1);
  for (double theta : {1e-3, 0.1, 0.6, 1.0}) {
    const EmbeddedPatch line =
        curve_with_reeb_angle(make_curve_scenario(1, CurveFamily::Line, theta, 1.0));
    CHECK(non_characteristic_check(h, line, v1(0.5)).ok);
  }
  // Horizontal segment along X1: Reeb angle 0.
  const EmbeddedPatch flat(
      3, v1(0.0), v1(1.0),
      [](const Vec& x) {
        Vec q = Vec::Zero(3);
        q[0] = x[0];
        return q;
      });
  CHECK(reeb_angle(h, flat, v1(0.5)) == doctest::Approx(0.0));
  const NonCharacteristic nc = non_characteristic_check(h, flat, v1(0.5));
  CHECK_FALSE(nc.ok);
  CHECK(nc.margin < kCharacteristicTol);
  CHECK_THROWS_AS(AnnihilatorFrame(h, flat).sections(v1(0.5)), CharacteristicPoint);
}

TEST_CASE("finite-difference tangents match the closed form") {
  const EmbeddedPatch c = presets::circle(2.0);
  const EmbeddedPatch fd(3, c.lo(), c.hi(), [c](const Vec& x) { return c.embed(x); });
  for (double t : {0.2, 3.0}) {
    CHECK((fd.tangent(v1(t)) - c.tangent(v1(t))).norm() < 1e-8);
  }
}

TEST_CASE("periodic wrapping and the extended box") {
  const EmbeddedPatch c = presets::circle(1.0);
  CHECK(c.periodic(0));
  CHECK(c.wrap(v1(2 * pi + 0.5))[0] == doctest::Approx(0.5));
  CHECK(c.wrap(v1(-0.5))[0] == doctest::Approx(2 * pi - 0.5));
  const EmbeddedPatch seg = presets::segment_z(3, 1.0);
  CHECK(seg.in_extended_box(v1(1.2)));
  CHECK_FALSE(seg.in_extended_box(v1(1.3)));
}

TEST_CASE("closed-form distances") {
  CHECK(presets::circle(1.0).distance(Vec::Constant(3, 1.0)) ==
        doctest::Approx(std::hypot(std::sqrt(2.0) - 1.0, 1.0)));
  Vec q(3);
  q << 0.0, 0.0, 1.5;
  CHECK(presets::sphere(1.0).distance(q) == doctest::Approx(0.5));
  q << 0.0, 0.0, 0.5;
  CHECK(presets::sphere(1.0).distance(q) == doctest::Approx(-0.5));
  q << 0.3, 0.4, 7.0;
  CHECK(presets::segment_z(3, 1.0).distance(q) == doctest::Approx(0.5));
}

TEST_CASE("invalid patches are rejected") {
  CHECK_THROWS_AS(presets::circle(-1.0), InvalidInput);
  CHECK_THROWS_AS(EmbeddedPatch(3, v1(1.0), v1(0.0), [](const Vec&) { return Vec(3); }),
                  InvalidInput);
  CHECK_THROWS_AS(AnnihilatorFrame(SRStructure::euclidean(4), presets::circle(1.0)),
                  InvalidInput);
}
