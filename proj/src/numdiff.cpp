#include "srtube/numdiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "srtube/types.hpp"

namespace srtube {

std::vector<double> central_weights(int k, int p) {
  const int n = 2 * p + 1;
  if (k < 0 || k >= n) throw InvalidInput("stencil too small for derivative order");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = i - p;
  std::vector<std::vector<double>> c(n, std::vector<double>(k + 1, 0.0));
  double c1 = 1.0, c4 = x[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, k);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int s = mn; s >= 1; --s) {
          c[i][s] = c1 * (s * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int s = mn; s >= 1; --s) c[j][s] = (c4 * c[j][s] - s * c[j][s - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][k];
  return w;
}

TaylorDerivatives taylor_derivatives(const std::function<double(double)>& g, int K, double h) {
  if (K < 0 || !(h > 0.0)) throw InvalidInput("bad Taylor derivative request");
  // Samples are cached on the grid of multiples of h/4.
  std::map<int, double> cache;
  auto sample = [&](int j) {
    auto it = cache.find(j);
    if (it != cache.end()) return it->second;
    const double v = g(0.25 * h * j);
    cache.emplace(j, v);
    return v;
  };

  TaylorDerivatives out;
  out.value.assign(K + 1, 0.0);
  out.spread.assign(K + 1, 0.0);
  out.value[0] = sample(0);
  for (int k = 1; k <= K; ++k) {
    const int p = (k + 1) / 2;
    const std::vector<double> w = central_weights(k, p);
    double level[3];
    for (int l = 0; l < 3; ++l) {
      const int mult = 4 >> l;
      const double step = h / (1 << l);
      double acc = 0.0;
      for (int i = -p; i <= p; ++i) {
        const double wi = w[i + p];
        if (wi != 0.0) acc += wi * sample(i * mult);
      }
      level[l] = acc / std::pow(step, k);
    }
    const double r1a = (4.0 * level[1] - level[0]) / 3.0;
    const double r1b = (4.0 * level[2] - level[1]) / 3.0;
    out.value[k] = (16.0 * r1b - r1a) / 15.0;
    out.spread[k] = std::abs(out.value[k] - r1b);
  }
  return out;
}

}  // namespace srtube
