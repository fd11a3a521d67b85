#include "srtube/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srtube {

using std::numbers::pi;

CurveFamily parse_curve_family(const std::string& name) {
  if (name == "line") return CurveFamily::Line;
  if (name == "helix") return CurveFamily::Helix;
  if (name == "z-axis" || name == "zaxis" || name == "z_axis") return CurveFamily::ZAxis;
  throw InvalidInput("unknown curve family '" + name + "'");
}

std::string to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::Line: return "line";
    case CurveFamily::Helix: return "helix";
    case CurveFamily::ZAxis: return "z-axis";
  }
  return "?";
}

CurveScenario make_curve_scenario(int d, CurveFamily family, double theta, double length,
                                  double rho) {
  if (d < 1) throw InvalidInput("d must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidInput("Reeb angle must lie in (0, 1]");
  if (!(length > 0.0)) throw InvalidInput("curve length must be positive");
  CurveScenario sc;
  sc.d = d;
  sc.family = family;
  sc.theta = theta;
  sc.length = length;
  switch (family) {
    case CurveFamily::ZAxis:
      if (theta != 1.0) throw InvalidInput("the z-axis has Reeb angle 1");
      sc.alpha = pi / 2;
      break;
    case CurveFamily::Line:
      sc.alpha = std::asin(theta);
      break;
    case CurveFamily::Helix:
      if (!(rho > 0.0)) throw InvalidInput("helix radius must be positive");
      if (theta >= 1.0) throw InvalidInput("a helix needs Reeb angle below 1");
      sc.rho = rho;
      sc.omega = std::sqrt(1.0 - theta * theta) / rho;
      // z' = theta + (x y' - y x')/2 along the planar circle.
      sc.slope = theta + 0.5 * rho * rho * sc.omega;
      break;
  }
  return sc;
}

EmbeddedPatch curve_with_reeb_angle(const CurveScenario& sc) {
  switch (sc.family) {
    case CurveFamily::ZAxis:
      return presets::segment_z(2 * sc.d + 1, sc.length);
    case CurveFamily::Line:
      return presets::line_angle(sc.d, sc.alpha, sc.length);
    case CurveFamily::Helix:
      return presets::helix(sc.d, sc.rho, sc.omega, sc.slope, sc.length);
  }
  throw InvalidInput("unknown curve family");
}

CurveCertificate certify_curve(const CurveScenario& sc, int samples) {
  const SRStructure s = SRStructure::heisenberg(sc.d);
  const EmbeddedPatch c = curve_with_reeb_angle(sc);
  const int n = s.dim();
  CurveCertificate cert{0.0, 0.0};
  for (int i = 0; i < samples; ++i) {
    const Vec x = Vec::Constant(1, sc.length * i / (samples - 1));
    const Vec q = c.embed(x);
    Mat B(n, n);
    B << s.fields(q), s.reeb(q);
    const Vec coeff = B.fullPivLu().solve(Vec(c.tangent(x).col(0)));
    cert.speed_error = std::max(cert.speed_error, std::abs(coeff.norm() - 1.0));
    cert.theta_error = std::max(cert.theta_error, std::abs(reeb_angle(s, c, x) - sc.theta));
  }
  return cert;
}

HotellingReport hotelling_compare(const TubeSpec& a, const TubeSpec& b, int count,
                                  double r_max) {
  if (count < 1) throw InvalidInput("need at least one radius");
  HotellingReport rep;
  rep.inj_a = injectivity_radius_estimate(a, r_max);
  rep.inj_b = injectivity_radius_estimate(b, r_max);
  rep.window = 0.5 * std::min(rep.inj_a.radius, rep.inj_b.radius);
  for (int i = 1; i <= count; ++i) {
    const double r = rep.window * i / count;
    const double va = tube_volume(a, r), vb = tube_volume(b, r);
    rep.radii.push_back(r);
    rep.volume_a.push_back(va);
    rep.volume_b.push_back(vb);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(va - vb) / std::abs(va));
  }
  return rep;
}

namespace {

// (sin a - a cos a) / a^3 without cancellation near 0.
double s3(double a) {
  if (std::abs(a) < 0.5) {
    // sum_k (-1)^{k+1} 2k a^{2k-2} / (2k+1)!
    double term = 1.0 / 3.0, sum = 0.0;
    const double a2 = a * a;
    for (int k = 1; k < 12; ++k) {
      sum += term;
      term *= -a2 * (2.0 * k + 2) / (2.0 * k) / ((2.0 * k + 2) * (2.0 * k + 3));
    }
    return sum;
  }
  return (std::sin(a) - a * std::cos(a)) / (a * a * a);
}

double sinc(double a) { return a == 0.0 ? 1.0 : std::sin(a) / a; }

}  // namespace

double heisenberg_point_jacobian(int d, const Vec& p_x, double p_z) {
  if (d < 1 || p_x.size() != 2 * d) throw InvalidInput("p_x must have 2d entries");
  if (!p_x.allFinite() || !std::isfinite(p_z)) throw InvalidInput("non-finite covector");
  const double a = 0.5 * p_z;
  return 0.25 * p_x.squaredNorm() * std::pow(sinc(a), 2 * d - 1) * s3(a);
}

bool point_jacobian_near_pole(double p_z) {
  const double k = std::round(p_z / (2 * pi));
  return k != 0.0 && std::abs(p_z - 2 * pi * k) < 1e-6;
}

double heisenberg_point_jacobian_flow(int d, const Vec& p_x, double p_z, const ODESettings& o) {
  const SRStructure s = SRStructure::heisenberg(d);
  const int n = s.dim();
  Vec p(n);
  p << p_x, p_z;
  Mat xi = Mat::Zero(2 * n, n);
  xi.bottomRows(n) = Mat::Identity(n, n);
  const FlowTangents ft = flow_with_tangents(s, {Vec::Zero(n), p}, xi, 1.0, o);
  return ft.tangents.topRows(n).determinant();
}

double euclidean_reference_volume(const std::string& preset, double param, double r) {
  if (!(r >= 0.0)) throw InvalidInput("radius must be >= 0");
  if (preset == "circle") return 2 * pi * pi * param * r * r;
  if (preset == "sphere") return 4 * pi / 3 * (std::pow(param + r, 3) - std::pow(param, 3));
  if (preset == "segment") return pi * param * r * r + 4 * pi / 3 * r * r * r;
  if (preset == "segment_capless") return pi * param * r * r;
  throw InvalidInput("unknown reference preset '" + preset + "'");
}

}  // namespace srtube
