#include <cmath>
#include <vector>

#include "doctest.h"
#include "srtube/ode.hpp"
#include "srtube/types.hpp"

using namespace srtube;

namespace {

// y'' = -y as a first-order system.
void oscillator(const double* y, double* dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
}

double fixed_error(int steps) {
  double y[2] = {1.0, 0.0};
  integrate(oscillator, 2, y, 2.0, ODESettings::fixed(steps));
  return std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
}

}  // namespace

TEST_CASE("adaptive integration of the harmonic oscillator") {
  double y[2] = {1.0, 0.0};
  OdeStats st;
  integrate(oscillator, 2, y, 10.0, ODESettings{}, {}, &st);
  CHECK(y[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(-std::sin(10.0)).epsilon(1e-9));
  CHECK(st.accepted > 0);
}

TEST_CASE("backward integration returns to the start") {
  double y[2] = {0.3, -0.7};
  integrate(oscillator, 2, y, 3.0, ODESettings{});
  integrate(oscillator, 2, y, -3.0, ODESettings{});
  CHECK(y[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(-0.7).epsilon(1e-9));
}

TEST_CASE("fixed steps converge with order 8") {
  const double e1 = fixed_error(8), e2 = fixed_error(16);
  const double order = std::log2(e1 / e2);
  CHECK(order > 7.5);
  CHECK(order < 9.0);
}

TEST_CASE("fixed steps are a smooth function of the end time") {
  // Same step count at nearby end times: no step-size switching, so the
  // result is polynomial-smooth in t and a second difference is tiny.
  auto at = [](double t) {
    double y[2] = {1.0, 0.0};
    integrate(oscillator, 2, y, t, ODESettings::fixed(20));
    return y[0];
  };
  const double h = 1e-3;
  const double d2 = (at(1.0 + h) - 2 * at(1.0) + at(1.0 - h)) / (h * h);
  CHECK(d2 == doctest::Approx(-std::cos(1.0)).epsilon(1e-5));
}

TEST_CASE("monitor rejection reports the exit time") {
  double y[2] = {0.0, 1.0};
  auto monitor = [](const double* s) { return s[0] < 0.5; };
  try {
    integrate(oscillator, 2, y, 3.0, ODESettings{}, monitor);
    FAIL("expected ChartExit");
  } catch (const ChartExit& e) {
    // sin(t) = 0.5 at t = pi/6; the exit is reported at the end of a step.
    CHECK(e.exit_time() > std::asin(0.5));
    CHECK(e.exit_time() < 3.0);
  }
}

TEST_CASE("step limit and invalid settings") {
  double y[2] = {1.0, 0.0};
  ODESettings o;
  o.max_steps = 2;
  CHECK_THROWS_AS(integrate(oscillator, 2, y, 100.0, o), StepLimit);

  ODESettings bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.rel_tol = 0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  ODESettings neg = ODESettings::fixed(0);
  CHECK_THROWS_AS(neg.validate(), InvalidInput);
}

TEST_CASE("zero-length integration is the identity") {
  double y[2] = {0.25, 0.5};
  integrate(oscillator, 2, y, 0.0, ODESettings{});
  CHECK(y[0] == 0.25);
  CHECK(y[1] == 0.5);
}
