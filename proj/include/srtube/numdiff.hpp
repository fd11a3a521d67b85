#pragma once

#include <functional>
#include <vector>

namespace srtube {

// 4th-order central first derivative of t -> f(t) at t = 0. Works for any
// return type supporting linear combinations (double, Eigen vectors/matrices).
template <class F>
auto central_diff4(F&& f, double h) -> std::decay_t<decltype(f(h))> {
  using R = std::decay_t<decltype(f(h))>;
  R a = f(h), b = f(-h), c = f(2 * h), d = f(-2 * h);
  return R((8.0 * (a - b) - (c - d)) / (12.0 * h));
}

// Sixth-order version of the same.
template <class F>
auto central_diff6(F&& f, double h) -> std::decay_t<decltype(f(h))> {
  using R = std::decay_t<decltype(f(h))>;
  R a = f(h), b = f(-h), c = f(2 * h), d = f(-2 * h), e = f(3 * h), g = f(-3 * h);
  return R((45.0 * (a - b) - 9.0 * (c - d) + (e - g)) / (60.0 * h));
}

// Finite-difference weights for the k-th derivative at 0 using integer
// offsets -p..p (Fornberg's recursion). Entry i belongs to offset i - p.
std::vector<double> central_weights(int k, int p);

struct TaylorDerivatives {
  std::vector<double> value;  // g^{(k)}(0), k = 0..K
  std::vector<double> spread; // |finest - next finest Richardson level|
};

// Derivatives of a smooth scalar function at 0 from minimal symmetric central
// stencils at steps h, h/2, h/4, combined by two Richardson levels.
TaylorDerivatives taylor_derivatives(const std::function<double(double)>& g, int K, double h);

}  // namespace srtube
