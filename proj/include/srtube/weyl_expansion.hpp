#pragma once

#include <functional>
#include <vector>

#include "srtube/tube_engine.hpp"

namespace srtube {

using ScalarField = std::function<double(const Vec&)>;

struct ThetaDerivatives {
  std::vector<double> theta;   // Theta^{(j)}(x, 0, u), j = 0..order
  std::vector<double> spread;  // Richardson disagreement of each entry
};

// Derivatives of Theta = g / rho^m at rho = 0, g(rho) = J^rho f(E^rho), from
// central differences of g at base step 0.05 r0. Throws NumericalError when
// the Taylor coefficients of g below order m do not vanish.
ThetaDerivatives theta_derivatives(const TubeSpec& spec, const Vec& x, const Vec& u, int order,
                                   double r0);

struct WeylExpansion {
  int codim = 0;
  std::vector<int> k;
  std::vector<double> c;
  std::vector<double> error;  // propagated Richardson spread
  std::vector<bool> odd;      // k - m odd (expected to vanish)
  bool step_warning = false;  // finest levels disagree by more than 1e-7 |c_m|
  double parity_max() const;  // largest |c_k| over odd k - m
};

// c_k = 1/(k (k-m)!) int_{B x S^{m-1}} Theta^{(k-m)}(x, 0, u), k = m..k_max.
WeylExpansion weyl_coefficients(const TubeSpec& spec, int k_max, double r0);

// c_k = 1/k! int_B Theta^{(k-1)}(x, 0, side), k = 1..k_max (m = 1).
WeylExpansion steiner_coefficients(const TubeSpec& spec, int k_max, double r0, int side = 1);

// Theta^{(j)} / Theta at (x, u).
double w_function(const TubeSpec& spec, const Vec& x, const Vec& u, int j, double r0);

struct DivergenceStack {
  std::vector<double> values;  // div^0 .. div^k
  int weight_exponent = 0;     // divergence taken against mu / delta^{weight_exponent}
};

// Step of the sixth-order central differences used around a point at distance delta.
double divergence_step(double delta);

// div^{k+1} = div^1 div^k + grad(delta)(div^k), with div^1 in expanded form.
DivergenceStack iterated_divergence(const SRStructure& s, const ScalarField& delta,
                                    int weight_exponent, const Vec& q, int k);
// Same quantities as (1/w) sum_l d_l(w div^{k-1} V^l), w = f / delta^{weight_exponent},
// V the horizontal gradient of delta.
DivergenceStack iterated_divergence_flux(const SRStructure& s, const ScalarField& delta,
                                         int weight_exponent, const Vec& q, int k);

struct WLimit {
  double limit;
  double values[3];  // symmetrised samples at r = 0.1, 0.05, 0.025 r0
};

// Richardson limit of div^j(E_r(x, u)) as r -> 0, using the samples at +u and
// -u to cancel odd powers of r.
WLimit w_limit(const TubeSpec& spec, const ScalarField& delta, const Vec& x, const Vec& u, int j,
               double r0);

struct FInvariants {
  double F1, F2, F3, F4, F5;
};

// Heisenberg H_3 invariants at q with (X_1, X_2) rotated by `angle`.
FInvariants heisenberg_F_invariants(const SRStructure& s, const ScalarField& delta, const Vec& q,
                                    double angle = 0.0);

// max |F5 - F2^2| over the points.
double check_F5_identity(const SRStructure& s, const ScalarField& delta,
                         const std::vector<Vec>& points);

// delta-oracles.
ScalarField closed_form_delta(const TubeSpec& spec);
// Shooting distance, Newton-started from the solution at `anchor`.
ScalarField shooting_delta(const TubeSpec& spec, const Vec& anchor, const ODESettings& ode);

}  // namespace srtube
