#include <cmath>
#include <memory>

#include "doctest.h"
#include "srtube/geometry_core.hpp"

using namespace srtube;

namespace {

// Martinet-type frame X1 = dx, X2 = dy + x^2/2 dz with a non-constant density;
// exercises the finite-difference defaults of FrameModel.
class Martinet : public FrameModel {
 public:
  int dim() const override { return 3; }
  int count() const override { return 2; }
  void fields(const Vec& q, Mat& X) const override {
    X.setZero(3, 2);
    X(0, 0) = 1.0;
    X(1, 1) = 1.0;
    X(2, 1) = 0.5 * q[0] * q[0];
  }
  double density(const Vec& q) const override { return std::exp(0.1 * q[0]); }
};

SRStructure martinet() {
  return SRStructure(std::make_shared<Martinet>(), "martinet", Vec::Constant(3, -50),
                     Vec::Constant(3, 50));
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Geodesic of H_3 from the origin with initial covector (a, b, c), at time t.
PhasePoint heisenberg_geodesic(double a, double b, double c, double t) {
  const double h2 = a * a + b * b;
  double x, y, z;
  if (std::abs(c) < 1e-12) {
    x = a * t;
    y = b * t;
    z = 0.0;
  } else {
    const double s = std::sin(c * t), k = 1.0 - std::cos(c * t);
    x = (a * s - b * k) / c;
    y = (b * s + a * k) / c;
    z = h2 * (c * t - s) / (2 * c * c);
  }
  const double h1 = a * std::cos(c * t) - b * std::sin(c * t);
  const double hh = a * std::sin(c * t) + b * std::cos(c * t);
  return {v3(x, y, z), v3(h1 + 0.5 * y * c, hh - 0.5 * x * c, c)};
}

}  // namespace

TEST_CASE("Hamiltonian of the Euclidean and Heisenberg structures") {
  const SRStructure e = SRStructure::euclidean(3);
  CHECK(hamiltonian(e, {v3(1, 2, 3), v3(0.3, -0.4, 1.2)}) ==
        doctest::Approx(0.5 * (0.09 + 0.16 + 1.44)));
  const SRStructure h = SRStructure::heisenberg(1);
  // At q = (1, 2, 0): <p, X1> = px - y pz / 2, <p, X2> = py + x pz / 2.
  const double h1 = 0.3 - 1.0 * 2.0, h2 = -0.4 + 0.5 * 2.0;
  CHECK(hamiltonian(h, {v3(1, 2, 0), v3(0.3, -0.4, 2.0)}) ==
        doctest::Approx(0.5 * (h1 * h1 + h2 * h2)));
}

TEST_CASE("Heisenberg bracket [X1, X2] is the Reeb field") {
  const SRStructure h = SRStructure::heisenberg(1);
  for (const Vec& q : {v3(0, 0, 0), v3(0.7, -1.3, 2.0)}) {
    const Vec br = h.field_jacobian(q, 1) * h.field(q, 0) - h.field_jacobian(q, 0) * h.field(q, 1);
    CHECK((br - h.reeb(q)).norm() < 1e-14);
  }
}

TEST_CASE("finite-difference field jacobian matches the closed form") {
  const SRStructure m = martinet();
  const Vec q = v3(0.8, -0.2, 0.5);
  Mat exact = Mat::Zero(3, 3);
  exact(2, 0) = q[0];
  CHECK((m.field_jacobian(q, 1) - exact).norm() < 1e-8);
  CHECK(m.model().log_density_gradient(q)[0] == doctest::Approx(0.1).epsilon(1e-8));
}

TEST_CASE("Heisenberg flow matches the closed-form geodesics") {
  const SRStructure h = SRStructure::heisenberg(1);
  for (const auto& [a, b, c] : {std::tuple{1.0, 0.0, 0.0}, std::tuple{0.6, -0.8, 2.5},
                                std::tuple{0.2, 0.3, -6.0}}) {
    const PhasePoint end = flow(h, {Vec::Zero(3), v3(a, b, c)}, 1.0, ODESettings{});
    const PhasePoint ref = heisenberg_geodesic(a, b, c, 1.0);
    CHECK((end.q - ref.q).norm() < 1e-9);
    CHECK((end.p - ref.p).norm() < 1e-9);
  }
}

TEST_CASE("energy is conserved along the flow") {
  const SRStructure m = martinet();
  const PhasePoint lam{v3(0.3, 0.1, -0.2), v3(0.5, 1.0, 0.8)};
  const double h0 = hamiltonian(m, lam);
  const ODESettings o;
  for (double t : {-2.0, -0.7, 0.5, 2.0}) {
    CAPTURE(t);
    CHECK(std::abs(hamiltonian(m, flow(m, lam, t, o)) - h0) <= 10 * o.rel_tol * h0);
  }
}

TEST_CASE("flows compose: flow(flow(lambda, s), t) = flow(lambda, s + t)") {
  for (const SRStructure& st : {SRStructure::heisenberg(1), martinet()}) {
    const PhasePoint lam{v3(0.1, -0.3, 0.2), v3(0.7, 0.4, -1.1)};
    for (const auto& [s, t] : {std::pair{0.4, 0.9}, std::pair{1.5, -0.6}}) {
      const PhasePoint a = flow(st, flow(st, lam, s, ODESettings{}), t, ODESettings{});
      const PhasePoint b = flow(st, lam, s + t, ODESettings{});
      Vec da(6), db(6);
      da << a.q, a.p;
      db << b.q, b.p;
      CHECK((da - db).norm() <= 1e-8 * db.norm());
    }
  }
}

TEST_CASE("flow is invariant under left translations of H_3") {
  const SRStructure h = SRStructure::heisenberg(1);
  const Vec g = v3(0.4, -1.1, 0.3);
  auto translate = [&](const Vec& q) {
    return v3(g[0] + q[0], g[1] + q[1], g[2] + q[2] + 0.5 * (g[0] * q[1] - g[1] * q[0]));
  };
  Mat dL = Mat::Identity(3, 3);
  dL(2, 0) = -0.5 * g[1];
  dL(2, 1) = 0.5 * g[0];
  const PhasePoint lam{v3(0.2, 0.5, -0.1), v3(0.9, -0.3, 1.7)};
  const PhasePoint moved{translate(lam.q), dL.transpose().inverse() * lam.p};
  const PhasePoint a = flow(h, lam, 1.3, ODESettings{});
  const PhasePoint b = flow(h, moved, 1.3, ODESettings{});
  CHECK((translate(a.q) - b.q).norm() < 1e-9);
}

TEST_CASE("scaling the covector rescales time") {
  const SRStructure m = martinet();
  const PhasePoint lam{v3(0.1, 0.2, 0.0), v3(0.4, 0.7, -0.5)};
  const PhasePoint a = flow(m, {lam.q, 2.5 * lam.p}, 0.4, ODESettings{});
  const PhasePoint b = flow(m, lam, 1.0, ODESettings{});
  CHECK((a.q - b.q).norm() < 1e-9);
  CHECK((a.p - 2.5 * b.p).norm() < 1e-8);
}

TEST_CASE("Hamiltonian jacobian matches differences of the vector field") {
  for (const SRStructure& s : {SRStructure::heisenberg(1), martinet()}) {
    const PhasePoint lam{v3(0.3, -0.6, 0.2), v3(1.1, 0.4, -0.9)};
    const Mat J = hamiltonian_jacobian(s, lam);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      PhasePoint a = lam, b = lam;
      if (k < 3) {
        a.q[k] += h;
        b.q[k] -= h;
      } else {
        a.p[k - 3] += h;
        b.p[k - 3] -= h;
      }
      const Vec col = (hamiltonian_vector_field(s, a) - hamiltonian_vector_field(s, b)) / (2 * h);
      CHECK((J.col(k) - col).norm() < 1e-6);
    }
  }
}

TEST_CASE("linearized flow matches differences of the flow") {
  const SRStructure m = martinet();
  const PhasePoint lam{v3(0.2, 0.1, 0.3), v3(0.8, -0.5, 0.6)};
  Vec xi(6);
  xi << 0.3, -0.2, 0.5, 0.1, 0.4, -0.7;
  const Vec lin = linearized_flow(m, lam, xi, 1.5, ODESettings{});
  const double h = 1e-5;
  auto shifted = [&](double s) {
    const PhasePoint p{lam.q + s * xi.head(3), lam.p + s * xi.tail(3)};
    const PhasePoint e = flow(m, p, 1.5, ODESettings{});
    Vec out(6);
    out << e.q, e.p;
    return out;
  };
  const Vec fd = (shifted(h) - shifted(-h)) / (2 * h);
  CHECK((lin - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
}

TEST_CASE("flow_with_tangents agrees with linearized_flow column by column") {
  const SRStructure h = SRStructure::heisenberg(1);
  const PhasePoint lam{v3(0, 0, 0), v3(0.6, 0.8, 1.5)};
  Mat xi = Mat::Zero(6, 2);
  xi(3, 0) = 1.0;
  xi(5, 1) = 1.0;
  const FlowTangents ft = flow_with_tangents(h, lam, xi, 1.0, ODESettings{});
  for (int c = 0; c < 2; ++c) {
    CHECK((ft.tangents.col(c) - linearized_flow(h, lam, xi.col(c), 1.0, ODESettings{})).norm() <
          1e-9);
  }
}

TEST_CASE("leaving the chart is reported") {
  const Vec lo = Vec::Constant(3, -1.0), hi = Vec::Constant(3, 1.0);
  const SRStructure boxed(std::make_shared<Martinet>(), "boxed", lo, hi);
  CHECK_THROWS_AS(flow(boxed, {Vec::Zero(3), v3(1, 0, 0)}, 5.0, ODESettings{}), ChartExit);
}

TEST_CASE("dimension mismatches are rejected") {
  const SRStructure h = SRStructure::heisenberg(1);
  CHECK_THROWS_AS(hamiltonian(h, {Vec::Zero(2), Vec::Zero(3)}), InvalidInput);
}

TEST_CASE("horizontal gradient components") {
  const SRStructure h = SRStructure::heisenberg(1);
  // phi = z: X1 phi = -y/2, X2 phi = x/2.
  const Vec c = horizontal_gradient_components(h, v3(2, 4, 0), v3(0, 0, 1));
  CHECK(c[0] == doctest::Approx(-2.0));
  CHECK(c[1] == doctest::Approx(1.0));
}
