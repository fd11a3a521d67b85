#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srtube/quadrature.hpp"
#include "srtube/submanifold.hpp"

namespace srtube {

struct QuadratureSettings {
  int nodes_x = 8;
  int nodes_sphere = 32;
  int nodes_radial = 10;
  int threads = 0;  // 0: hardware concurrency; never affects results

  void validate(int codim) const;
  // Multiplies all node counts by f (rounded, sphere count kept even).
  QuadratureSettings scaled(double f) const;
};

class TubeSpec {
 public:
  TubeSpec(SRStructure s, EmbeddedPatch patch, ODESettings ode = {},
           QuadratureSettings quad = {}, int frame_grid = 0);

  const SRStructure& structure() const { return frame_->structure(); }
  const EmbeddedPatch& patch() const { return frame_->patch(); }
  const AnnihilatorFrame& frame() const { return *frame_; }
  int codim() const { return frame_->codim(); }
  int dim() const { return structure().dim(); }

  ODESettings ode;
  QuadratureSettings quad;

  std::string fingerprint() const;

 private:
  std::shared_ptr<const AnnihilatorFrame> frame_;
};

// Frame data at one parameter point, aligned to a fixed reference.
struct FiberContext {
  Vec x;
  Vec q0;
  Mat tangent;           // n x (n - m)
  Mat nu;                // m x n
  std::vector<Mat> dnu;  // d nu / d x_j
  double orientation;    // sign of det[T | X X^T nu^T]
};

FiberContext fiber_context(const TubeSpec& spec, const Vec& x, const Mat* reference = nullptr,
                           bool with_derivatives = true);

struct ExpSample {
  double rho = 0.0;
  Vec point;
  Mat columns;           // [dE/dx | dE/du], empty when not requested
  double jacobian = 0.0; // oriented J^rho(x, u)
  double density = 0.0;  // f(E)
};

// E^rho(x, u) for each rho in `rhos` (increasing, >= 0, or a single value of
// any sign), integrating one trajectory from rho = 0.
std::vector<ExpSample> exp_samples(const TubeSpec& spec, const FiberContext& ctx, const Vec& u,
                                   const std::vector<double>& rhos, const ODESettings& ode,
                                   bool with_jacobian);

Vec normal_exponential(const TubeSpec& spec, const Vec& x, const Vec& p);
Vec exponential_at_radius(const TubeSpec& spec, const Vec& x, const Vec& u, double r);
double radial_jacobian(const TubeSpec& spec, const Vec& x, const Vec& u, double rho);
// Cross-check route: every column by finite differences of the composite map.
double radial_jacobian_fd(const TubeSpec& spec, const Vec& x, const Vec& u, double rho);

// Fixed-step settings for maps that are differentiated numerically: about 1.5
// times the adaptive step count needed up to radius r.
ODESettings smooth_ode(const TubeSpec& spec, double r);

double tube_volume(const TubeSpec& spec, double r);
// side = +1 or -1; needs m = 1 and a co-orientation.
double half_tube_volume(const TubeSpec& spec, double r, int side = 1);

struct VolumeCurve {
  std::vector<double> radii;
  std::vector<double> volumes;
  std::string fingerprint;
};

VolumeCurve volume_curve(const TubeSpec& spec, const std::vector<double>& radii);

struct InjectivityEstimate {
  double radius;          // 0.9 x first failure, or 0.9 x r_max
  bool certified;         // false when no failure was seen below r_max
  double failure_radius;  // first failure found (r_max if none)
  std::string reason;     // "jacobian", "collision" or "none"
};

// Scans the quadrature (x, u) grid over `levels` radial levels up to r_max.
InjectivityEstimate injectivity_radius_estimate(const TubeSpec& spec, double r_max,
                                                int levels = 48);

struct InverseResult {
  Vec x;
  Vec p;  // in the frame returned by sections(x)
  double residual = 0.0;
  bool ambiguous = false;
};

// Newton shooting from the `seeds` grid points nearest to the target.
InverseResult invert_exponential(const TubeSpec& spec, const Vec& target,
                                 const ODESettings& ode, int seeds = 3);
// Newton shooting from a known nearby solution.
InverseResult invert_exponential_from(const TubeSpec& spec, const Vec& target, const Vec& x0,
                                      const Vec& p0, const ODESettings& ode);

double distance_from_patch(const TubeSpec& spec, const Vec& target, const ODESettings& ode);

// | |grad delta| - 1 | with grad delta from central differences (step 1e-5)
// of the shooting distance.
double eikonal_residual(const TubeSpec& spec, const Vec& target, const ODESettings& ode);

struct MonteCarloResult {
  double value;
  double stderr_;
};

// side: 0 full tube, +1 / -1 one side of a co-oriented hypersurface.
MonteCarloResult monte_carlo_tube_volume(const TubeSpec& spec, double r, long samples,
                                         unsigned long long seed, int side = 0);

}  // namespace srtube
