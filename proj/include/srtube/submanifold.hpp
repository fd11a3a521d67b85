#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srtube/geometry_core.hpp"

namespace srtube {

// A parametrized patch x in B -> embed(x) in R^n of codimension m.
class EmbeddedPatch {
 public:
  using EmbedFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;
  using CovectorFn = std::function<Vec(const Vec&)>;
  using DistanceFn = std::function<double(const Vec&)>;
  using BoundsFn = std::function<std::pair<Vec, Vec>(double)>;

  EmbeddedPatch(int ambient_dim, Vec lo, Vec hi, EmbedFn embed, JacobianFn jacobian = {},
                std::string name = "custom");

  int ambient_dim() const { return n_; }
  int param_dim() const { return static_cast<int>(lo_.size()); }
  int codim() const { return n_ - param_dim(); }
  const std::string& name() const { return name_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  Vec box_size() const { return hi_ - lo_; }

  Vec embed(const Vec& x) const;
  // Tangent frame, n x (n - m). Finite differences when no closed form is set.
  Mat tangent(const Vec& x) const;

  // Optional data. Periodic parameters wrap in Newton inversion; the
  // co-orientation selects the positive side of a hypersurface.
  void set_periodic(int j, bool periodic = true);
  bool periodic(int j) const { return periodic_[j]; }
  void set_co_orientation(CovectorFn f) { co_orientation_ = std::move(f); }
  bool has_co_orientation() const { return static_cast<bool>(co_orientation_); }
  Vec co_orientation(const Vec& x) const;

  // Closed-form distance (signed for m = 1, positive side positive) and a
  // bounding box of {delta < r}; both used by the Monte-Carlo oracle.
  void set_distance(DistanceFn d, BoundsFn bounds);
  bool has_distance() const { return static_cast<bool>(distance_); }
  double distance(const Vec& q) const;
  std::pair<Vec, Vec> distance_bounds(double r) const;

  // Fraction of the box by which the patch is declared to extend past B.
  double extension() const { return extension_; }
  void set_extension(double e) { extension_ = e; }

  // Maps x into the box on periodic coordinates.
  Vec wrap(const Vec& x) const;
  // True if x lies in the box enlarged by the declared extension.
  bool in_extended_box(const Vec& x) const;

 private:
  int n_;
  Vec lo_, hi_;
  EmbedFn embed_;
  JacobianFn jacobian_;
  std::string name_;
  std::vector<bool> periodic_;
  CovectorFn co_orientation_;
  DistanceFn distance_;
  BoundsFn bounds_;
  double extension_ = 0.25;
};

namespace presets {

// Circle of radius R in the xy-plane of R^3, t in [0, 2 pi).
EmbeddedPatch circle(double R);
// Sphere of radius R in R^3, (polar, azimuth) in (0, pi) x (0, 2 pi).
EmbeddedPatch sphere(double R);
// Segment t -> t e_n, t in [0, L], in R^n.
EmbeddedPatch segment_z(int n, double L);
// Line t -> (t cos a, 0, .., t sin a), t in [0, L], in R^{2d+1}.
EmbeddedPatch line_angle(int d, double alpha, double L);
// Helix t -> (rho cos wt, 0.., rho sin wt, 0.., slope t) in R^{2d+1}, t in [0, L].
EmbeddedPatch helix(int d, double rho, double omega, double slope, double L);
// Graph z = h(x, y) over [-a, a]^2, h given by graded monomial coefficients
// c00, c10, c01, c20, c11, c02, c30, ...
EmbeddedPatch graph2d(const std::vector<double>& coeffs, double a);
// Plane y = 0 in R^3 over [0, s]^2 in (x, z), co-oriented by dy.
EmbeddedPatch vertical_plane(double s);
// A single point of R^n.
EmbeddedPatch point(const Vec& where);

}  // namespace presets

struct NonCharacteristic {
  bool ok;
  double margin;  // smallest singular value of [X_1 .. X_N | T]
};

constexpr double kCharacteristicTol = 1e-8;

NonCharacteristic non_characteristic_check(const SRStructure& s, const EmbeddedPatch& patch,
                                           const Vec& x);

// Covector frame of the annihilator of TS, orthonormal for the Hamiltonian
// scalar product. Rows of sections(x) are nu_1(x) .. nu_m(x).
class AnnihilatorFrame {
 public:
  // grid: reference nodes per parameter dimension (0 chooses a default).
  AnnihilatorFrame(const SRStructure& s, const EmbeddedPatch& patch, int grid = 0);

  int codim() const { return m_; }
  const SRStructure& structure() const { return s_; }
  const EmbeddedPatch& patch() const { return patch_; }

  // Frame at x, aligned with the reference of the nearest grid node.
  Mat sections(const Vec& x) const;
  // Derivatives d nu / d x_j (one m x n matrix per parameter), consistent
  // with sections(x).
  std::vector<Mat> section_derivatives(const Vec& x) const;

  // Same operations against an explicit reference frame.
  Mat sections_aligned(const Vec& x, const Mat& reference) const;
  std::vector<Mat> section_derivatives_aligned(const Vec& x, const Mat& reference) const;
  const Mat& reference_near(const Vec& x) const;

  // Hamiltonian Gram matrix nu (X X^T) nu^T at x.
  Mat gram(const Vec& x) const;

  // Reference grid nodes in the parameter box.
  const std::vector<Vec>& nodes() const { return nodes_; }

  // Any orthonormal basis of the annihilator (no continuity guarantee).
  Mat raw(const Vec& x) const;

 private:
  Mat align(const Mat& nu, const Mat& reference, const Vec& q) const;
  int nearest_node(const Vec& x) const;

  SRStructure s_;
  EmbeddedPatch patch_;
  int m_;
  int grid_;
  std::vector<Vec> nodes_;
  std::vector<Mat> refs_;
};

// Sup over unit tangent vectors W (canonical Riemannian extension) of
// g_R(W, X_0).
double reeb_angle(const SRStructure& s, const EmbeddedPatch& patch, const Vec& x);

}  // namespace srtube
