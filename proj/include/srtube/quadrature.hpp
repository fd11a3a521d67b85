#pragma once

#include <vector>

#include "srtube/types.hpp"

namespace srtube {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule with n points on [a, b].
Rule1D gauss_legendre(int n, double a, double b);

// Nodes (columns) and weights for a rule on a product of intervals.
struct PointRule {
  Mat nodes;  // dim x K
  std::vector<double> weights;
  int size() const { return static_cast<int>(weights.size()); }
};

// Tensor Gauss-Legendre rule on [lo, hi]. A zero-dimensional box gives one
// empty node with weight 1.
PointRule box_rule(const Vec& lo, const Vec& hi, int nodes_per_dim);

// Rule on the unit sphere S^{m-1} in R^m, weights summing to |S^{m-1}|.
//   m = 1: the two points +-1, weight 1 each.
//   m = 2: trapezoid with `nodes` equispaced angles.
//   m = 3: Gauss-Legendre in cos(theta) (nodes/2 points) x trapezoid in phi.
//   m > 3: nested angles, Gauss-Legendre with weight sin^{m-2}.
// The rule is symmetric under u -> -u whenever `nodes` is even.
PointRule sphere_rule(int m, int nodes);

// Surface area of S^{m-1}.
double sphere_area(int m);

}  // namespace srtube
