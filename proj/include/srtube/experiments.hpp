#pragma once

#include <string>
#include <vector>

#include "srtube/tube_engine.hpp"

namespace srtube {

enum class CurveFamily { Line, Helix, ZAxis };

CurveFamily parse_curve_family(const std::string& name);
std::string to_string(CurveFamily f);

// Constant Reeb angle curve in H_{2d+1} with unit speed for the canonical
// Riemannian extension.
struct CurveScenario {
  int d = 1;
  CurveFamily family = CurveFamily::Line;
  double theta = 1.0;
  double length = 1.0;
  double alpha = 0.0;  // line: tangent cos(alpha) X_1 + sin(alpha) X_0
  double rho = 0.5;    // helix radius
  double omega = 0.0;  // helix angular speed
  double slope = 0.0;  // helix vertical speed
};

// Solves the family parameters for the requested theta. For helices rho is
// an input (rho^2 omega^2 = 1 - theta^2).
CurveScenario make_curve_scenario(int d, CurveFamily family, double theta, double length,
                                  double rho = 0.5);
EmbeddedPatch curve_with_reeb_angle(const CurveScenario& sc);

struct CurveCertificate {
  double speed_error;  // max |g_R speed - 1|
  double theta_error;  // max |reeb angle - theta|
};
CurveCertificate certify_curve(const CurveScenario& sc, int samples = 257);

struct HotellingReport {
  std::vector<double> radii;
  std::vector<double> volume_a, volume_b;
  double max_deviation = 0.0;  // max |V_a - V_b| / V_a
  double window = 0.0;         // largest radius allowed
  InjectivityEstimate inj_a, inj_b;
};

// Radii: `count` equispaced values up to 0.5 x min of both injectivity
// estimates (scanned up to r_max).
HotellingReport hotelling_compare(const TubeSpec& a, const TubeSpec& b, int count = 8,
                                  double r_max = 1.0);

// Jacobian at p of the exponential map of H_{2d+1} from the origin:
//   ||p_x||^2 / 4 (sin(a)/a)^{2d-1} (sin a - a cos a)/a^3,  a = p_z / 2,
// equal to 2^{2d} ||p_x||^2 sin^{2d-1}(a) (sin a - a cos a) / p_z^{2d+2}.
double heisenberg_point_jacobian(int d, const Vec& p_x, double p_z);
bool point_jacobian_near_pole(double p_z);
// Same quantity from the variational flow.
double heisenberg_point_jacobian_flow(int d, const Vec& p_x, double p_z, const ODESettings& o);

// Classical Euclidean tube volumes. preset: "circle" (param R), "sphere"
// (outward shell, param R), "segment" (param L, with caps), "segment_capless".
double euclidean_reference_volume(const std::string& preset, double param, double r);

}  // namespace srtube
