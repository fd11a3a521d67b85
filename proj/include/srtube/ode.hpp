#pragma once

#include <functional>
#include <string>

namespace srtube {

enum class OdeMethod {
  Adaptive,   // embedded Dormand-Prince 8(5,3) with step-size control
  FixedStep,  // same tableau, uniform steps, no error control
};

struct ODESettings {
  OdeMethod method = OdeMethod::Adaptive;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_steps = 200000;
  int fixed_steps = 64;

  /// Throws InvalidInput unless tolerances lie in (0, 1e-2] and step counts are positive.
  void validate() const;

  static ODESettings fixed(int steps) {
    ODESettings s;
    s.method = OdeMethod::FixedStep;
    s.fixed_steps = steps;
    return s;
  }
};

struct OdeStats {
  int accepted = 0;
  int rejected = 0;
  int evaluations = 0;
};

// Autonomous right-hand side: dy = f(y), both of length `dim`.
using OdeRhs = std::function<void(const double* y, double* dy)>;
// Called after each accepted step; returning false aborts with ChartExit.
using OdeMonitor = std::function<bool(const double* y)>;

/// Integrates y' = f(y) from t = 0 to t = t_end (which may be negative) in place.
/// Throws ChartExit when the monitor rejects a state and StepLimit when
/// max_steps is exhausted.
void integrate(const OdeRhs& f, int dim, double* y, double t_end,
               const ODESettings& settings, const OdeMonitor& monitor = {},
               OdeStats* stats = nullptr);

}  // namespace srtube
