#include "srtube/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srtube {

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidInput("Gauss-Legendre rule needs at least one node");
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  if (!t) throw NumericalError("could not build Gauss-Legendre table");
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, i, &r.nodes[i], &r.weights[i], t);
  }
  gsl_integration_glfixed_table_free(t);
  // Ascending node order.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return r.nodes[a] < r.nodes[b]; });
  Rule1D sorted;
  for (int i : idx) {
    sorted.nodes.push_back(r.nodes[i]);
    sorted.weights.push_back(r.weights[i]);
  }
  return sorted;
}

PointRule box_rule(const Vec& lo, const Vec& hi, int nodes_per_dim) {
  const int k = static_cast<int>(lo.size());
  PointRule out;
  if (k == 0) {
    out.nodes.resize(0, 1);
    out.weights = {1.0};
    return out;
  }
  std::vector<Rule1D> rules;
  int total = 1;
  for (int j = 0; j < k; ++j) {
    rules.push_back(gauss_legendre(nodes_per_dim, lo[j], hi[j]));
    total *= nodes_per_dim;
  }
  out.nodes.resize(k, total);
  out.weights.resize(total);
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    double w = 1.0;
    for (int j = k - 1; j >= 0; --j) {
      const int i = rest % nodes_per_dim;
      rest /= nodes_per_dim;
      out.nodes(j, idx) = rules[j].nodes[i];
      w *= rules[j].weights[i];
    }
    out.weights[idx] = w;
  }
  return out;
}

double sphere_area(int m) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
}

namespace {

// Polar angle phi on [0, pi] with weight sin^{power}(phi): with t = cos(phi) this
// is Gauss-Gegenbauer for (1 - t^2)^{(power - 1) / 2}, exact for polynomials in t.
Rule1D polar_rule(int n, int power) {
  gsl_integration_fixed_workspace* w = gsl_integration_fixed_alloc(
      gsl_integration_fixed_gegenbauer, n, -1.0, 1.0, 0.5 * (power - 1), 0.0);
  if (w == nullptr) throw InvalidInput("cannot build polar rule");
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double* t = gsl_integration_fixed_nodes(w);
  const double* wt = gsl_integration_fixed_weights(w);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = std::acos(t[n - 1 - i]);
    r.weights[i] = wt[n - 1 - i];
  }
  gsl_integration_fixed_free(w);
  return r;
}

}  // namespace

PointRule sphere_rule(int m, int nodes) {
  if (m < 1) throw InvalidInput("sphere rule needs m >= 1");
  PointRule out;
  if (m == 1) {
    out.nodes.resize(1, 2);
    out.nodes << 1.0, -1.0;
    out.weights = {1.0, 1.0};
    return out;
  }
  if (nodes < 4) throw InvalidInput("sphere rule needs at least 4 nodes");
  if (m == 2) {
    out.nodes.resize(2, nodes);
    out.weights.assign(nodes, 2.0 * std::numbers::pi / nodes);
    for (int i = 0; i < nodes; ++i) {
      const double a = 2.0 * std::numbers::pi * i / nodes;
      out.nodes(0, i) = std::cos(a);
      out.nodes(1, i) = std::sin(a);
    }
    return out;
  }
  if (m == 3) {
    const int nt = std::max(2, nodes / 2);
    Rule1D c = gauss_legendre(nt, -1.0, 1.0);
    out.nodes.resize(3, nt * nodes);
    out.weights.resize(nt * nodes);
    int k = 0;
    for (int i = 0; i < nt; ++i) {
      const double s = std::sqrt(std::max(0.0, 1.0 - c.nodes[i] * c.nodes[i]));
      for (int j = 0; j < nodes; ++j, ++k) {
        const double a = 2.0 * std::numbers::pi * j / nodes;
        out.nodes(0, k) = s * std::cos(a);
        out.nodes(1, k) = s * std::sin(a);
        out.nodes(2, k) = c.nodes[i];
        out.weights[k] = c.weights[i] * 2.0 * std::numbers::pi / nodes;
      }
    }
    return out;
  }
  // u = (sin(phi) v, cos(phi)) with v on S^{m-2}.
  PointRule inner = sphere_rule(m - 1, nodes);
  Rule1D polar = polar_rule(std::max(2, nodes / 2), m - 2);
  const int ni = inner.size(), np = static_cast<int>(polar.nodes.size());
  out.nodes.resize(m, ni * np);
  out.weights.resize(ni * np);
  int k = 0;
  for (int i = 0; i < np; ++i) {
    const double s = std::sin(polar.nodes[i]), c = std::cos(polar.nodes[i]);
    for (int j = 0; j < ni; ++j, ++k) {
      out.nodes.col(k).head(m - 1) = s * inner.nodes.col(j);
      out.nodes(m - 1, k) = c;
      out.weights[k] = polar.weights[i] * inner.weights[j];
    }
  }
  return out;
}

}  // namespace srtube
