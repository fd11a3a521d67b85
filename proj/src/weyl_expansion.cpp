#include "srtube/weyl_expansion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srtube/numdiff.hpp"
#include "srtube/parallel.hpp"

namespace srtube {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double base_step(double r0) {
  if (!(r0 > 0) || !std::isfinite(r0)) throw InvalidInput("r0 must be positive");
  return 0.05 * r0;
}

// Fixed-step settings covering the widest stencil for derivatives up to K.
ODESettings theta_ode(const TubeSpec& spec, int K, double h) {
  return smooth_ode(spec, ((K + 1) / 2) * h);
}

ThetaDerivatives theta_at(const TubeSpec& spec, const FiberContext& ctx, const Vec& u, int order,
                          double h, const ODESettings& ode) {
  const int m = spec.codim();
  const int K = m + order;
  auto g = [&](double rho) {
    const ExpSample s = exp_samples(spec, ctx, u, {rho}, ode, true)[0];
    return s.jacobian * s.density;
  };
  const TaylorDerivatives d = taylor_derivatives(g, K, h);
  const double lead = std::abs(d.value[m] / factorial(m));
  for (int j = 0; j < m; ++j) {
    if (std::abs(d.value[j] / factorial(j)) > 1e-7 * lead) {
      std::ostringstream os;
      os << "Taylor coefficient " << j << " of J f does not vanish ("
         << d.value[j] / factorial(j) << " vs leading " << lead << ")";
      throw NumericalError(os.str());
    }
  }
  ThetaDerivatives out;
  for (int j = 0; j <= order; ++j) {
    const double s = factorial(j) / factorial(j + m);
    out.theta.push_back(d.value[j + m] * s);
    out.spread.push_back(d.spread[j + m] * s);
  }
  return out;
}

}  // namespace

ThetaDerivatives theta_derivatives(const TubeSpec& spec, const Vec& x, const Vec& u, int order,
                                   double r0) {
  if (order < 0 || order > 8) throw InvalidInput("theta derivative order must be in [0, 8]");
  const double h = base_step(r0);
  const FiberContext ctx = fiber_context(spec, x);
  return theta_at(spec, ctx, u, order, h, theta_ode(spec, spec.codim() + order, h));
}

double WeylExpansion::parity_max() const {
  double p = 0.0;
  for (size_t i = 0; i < c.size(); ++i) {
    if (odd[i]) p = std::max(p, std::abs(c[i]));
  }
  return p;
}

namespace {

WeylExpansion expansion(const TubeSpec& spec, int order, double r0, const PointRule& U,
                        bool steiner) {
  const int m = spec.codim();
  const double h = base_step(r0);
  const ODESettings ode = theta_ode(spec, m + order, h);
  const PointRule X = box_rule(spec.patch().lo(), spec.patch().hi(), spec.quad.nodes_x);
  const int nx = X.size(), nu = U.size(), tasks = nx * nu;

  std::vector<FiberContext> ctx(nx);
  parallel_for(nx, spec.quad.threads, [&](int i) { ctx[i] = fiber_context(spec, X.nodes.col(i)); });
  std::vector<ThetaDerivatives> th(tasks);
  parallel_for(tasks, spec.quad.threads, [&](int t) {
    th[t] = theta_at(spec, ctx[t / nu], U.nodes.col(t % nu), order, h, ode);
  });

  WeylExpansion w;
  w.codim = m;
  for (int j = 0; j <= order; ++j) {
    std::vector<double> terms(tasks), errs(tasks);
    for (int t = 0; t < tasks; ++t) {
      const double wt = X.weights[t / nu] * U.weights[t % nu];
      terms[t] = wt * th[t].theta[j];
      errs[t] = std::abs(wt) * th[t].spread[j];
    }
    const int k = steiner ? j + 1 : j + m;
    const double scale = steiner ? 1.0 / factorial(k) : 1.0 / (k * factorial(k - m));
    w.k.push_back(k);
    w.c.push_back(scale * stable_sum(terms));
    w.error.push_back(scale * stable_sum(errs));
    w.odd.push_back(!steiner && (k - m) % 2 == 1);
  }
  const double lead = std::abs(w.c[0]);
  for (double e : w.error) {
    if (e > 1e-7 * lead) w.step_warning = true;
  }
  return w;
}

}  // namespace

WeylExpansion weyl_coefficients(const TubeSpec& spec, int k_max, double r0) {
  const int m = spec.codim();
  if (k_max < m || k_max > m + 6) throw InvalidInput("k_max must lie in [m, m + 6]");
  return expansion(spec, k_max - m, r0, sphere_rule(m, spec.quad.nodes_sphere), false);
}

WeylExpansion steiner_coefficients(const TubeSpec& spec, int k_max, double r0, int side) {
  if (spec.codim() != 1) throw InvalidInput("Steiner coefficients need m = 1");
  if (!spec.patch().has_co_orientation()) throw InvalidInput("Steiner needs a co-orientation");
  if (side != 1 && side != -1) throw InvalidInput("side must be +1 or -1");
  if (k_max < 1 || k_max > 7) throw InvalidInput("k_max must lie in [1, 7]");
  PointRule U;
  U.nodes = Mat::Constant(1, 1, static_cast<double>(side));
  U.weights = {1.0};
  return expansion(spec, k_max - 1, r0, U, true);
}

double w_function(const TubeSpec& spec, const Vec& x, const Vec& u, int j, double r0) {
  if (j < 0 || j > 4) throw InvalidInput("w order must lie in [0, 4]");
  const ThetaDerivatives t = theta_derivatives(spec, x, u, j, r0);
  return t.theta[j] / t.theta[0];
}

double divergence_step(double delta) { return std::max(1e-4, 1.2e-2 * delta); }

namespace {

Vec gradient(const ScalarField& f, const Vec& q, double h) {
  Vec g(q.size());
  for (int a = 0; a < q.size(); ++a) {
    g[a] = central_diff6(
        [&](double t) {
          Vec y = q;
          y[a] += t;
          return f(y);
        },
        h);
  }
  return g;
}

// Derivative of f at q along the fixed vector v.
double along(const ScalarField& f, const Vec& q, const Vec& v, double h) {
  return central_diff6([&](double t) { return f(q + t * v); }, h);
}

// Horizontal gradient of delta as a vector field.
Vec horizontal_gradient(const SRStructure& s, const ScalarField& delta, const Vec& q, double h) {
  const Mat X = s.fields(q);
  return X * (X.transpose() * gradient(delta, q, h));
}

double checked_delta(const ScalarField& delta, const Vec& q) {
  const double d = delta(q);
  if (!(d >= 10 * 1e-4)) {
    std::ostringstream os;
    os << "point too close to the patch for divergences (delta = " << d << ")";
    throw TooCloseToPatch(os.str());
  }
  return d;
}

double div1_expanded(const SRStructure& s, const ScalarField& delta, int w, const Vec& q,
                     double h) {
  const Mat X = s.fields(q);
  const Vec lg = s.model().log_density_gradient(q);
  const double d = delta(q);
  double acc = 0.0, norm2 = 0.0;
  for (int i = 0; i < X.cols(); ++i) {
    const Vec Xi = X.col(i);
    ScalarField a_i = [&](const Vec& y) { return s.fields(y).col(i).dot(gradient(delta, y, h)); };
    const double ai = a_i(q);
    const double divX = s.field_jacobian(q, i).trace() + Xi.dot(lg);
    acc += along(a_i, q, Xi, h) + ai * divX;
    norm2 += ai * ai;
  }
  return acc - w / d * norm2;
}

double div_recursive(const SRStructure& s, const ScalarField& delta, int w, const Vec& q, int k,
                     double h) {
  if (k == 0) return 1.0;
  const double d1 = div1_expanded(s, delta, w, q, h);
  if (k == 1) return d1;
  ScalarField prev = [&](const Vec& y) { return div_recursive(s, delta, w, y, k - 1, h); };
  const Vec V = horizontal_gradient(s, delta, q, h);
  return d1 * prev(q) + along(prev, q, V, h);
}

double div_flux(const SRStructure& s, const ScalarField& delta, int w, const Vec& q, int k,
                double h) {
  if (k == 0) return 1.0;
  auto omega = [&](const Vec& y) { return s.measure_density(y) / std::pow(delta(y), w); };
  double acc = 0.0;
  for (int l = 0; l < q.size(); ++l) {
    acc += central_diff6(
        [&](double t) {
          Vec y = q;
          y[l] += t;
          const double inner = div_flux(s, delta, w, y, k - 1, h);
          return omega(y) * inner * horizontal_gradient(s, delta, y, h)[l];
        },
        h);
  }
  return acc / omega(q);
}

}  // namespace

DivergenceStack iterated_divergence(const SRStructure& s, const ScalarField& delta,
                                    int weight_exponent, const Vec& q, int k) {
  if (k < 0 || k > 3) throw InvalidInput("divergence order must lie in [0, 3]");
  const double h = divergence_step(checked_delta(delta, q));
  DivergenceStack st;
  st.weight_exponent = weight_exponent;
  for (int j = 0; j <= k; ++j) st.values.push_back(div_recursive(s, delta, weight_exponent, q, j, h));
  return st;
}

DivergenceStack iterated_divergence_flux(const SRStructure& s, const ScalarField& delta,
                                         int weight_exponent, const Vec& q, int k) {
  if (k < 0 || k > 3) throw InvalidInput("divergence order must lie in [0, 3]");
  const double h = divergence_step(checked_delta(delta, q));
  DivergenceStack st;
  st.weight_exponent = weight_exponent;
  for (int j = 0; j <= k; ++j) st.values.push_back(div_flux(s, delta, weight_exponent, q, j, h));
  return st;
}

WLimit w_limit(const TubeSpec& spec, const ScalarField& delta, const Vec& x, const Vec& u, int j,
               double r0) {
  if (j < 0 || j > 3) throw InvalidInput("w order must lie in [0, 3]");
  const int wexp = spec.codim() - 1;
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  WLimit out;
  const double fr[3] = {0.1, 0.05, 0.025};
  for (int l = 0; l < 3; ++l) {
    const double r = fr[l] * r0;
    const Vec qp = exponential_at_radius(spec, x, u, r);
    const Vec qm = exponential_at_radius(spec, x, -u, r);
    const double dp = iterated_divergence(spec.structure(), delta, wexp, qp, j).values[j];
    const double dm = iterated_divergence(spec.structure(), delta, wexp, qm, j).values[j];
    out.values[l] = 0.5 * (dp + sign * dm);
  }
  const double t1 = (4.0 * out.values[1] - out.values[0]) / 3.0;
  const double t2 = (4.0 * out.values[2] - out.values[1]) / 3.0;
  out.limit = (16.0 * t2 - t1) / 15.0;
  return out;
}

FInvariants heisenberg_F_invariants(const SRStructure& s, const ScalarField& delta, const Vec& q,
                                    double angle) {
  if (s.heisenberg_d() != 1) throw InvalidInput("F-invariants need the Heisenberg group H_3");
  checked_delta(delta, q);
  const double h = 1e-4;
  const Vec g = gradient(delta, q, h);
  Mat Hs(3, 3);
  for (int a = 0; a < 3; ++a) {
    Hs.col(a) = central_diff4(
        [&](double t) {
          Vec y = q;
          y[a] += t;
          return gradient(delta, y, h);
        },
        h);
  }
  Hs = 0.5 * (Hs + Hs.transpose()).eval();

  const double c = std::cos(angle), sn = std::sin(angle);
  const Mat X = s.fields(q);
  Vec V[3];
  Mat D[3];
  V[1] = c * X.col(0) + sn * X.col(1);
  V[2] = -sn * X.col(0) + c * X.col(1);
  D[1] = c * s.field_jacobian(q, 0) + sn * s.field_jacobian(q, 1);
  D[2] = -sn * s.field_jacobian(q, 0) + c * s.field_jacobian(q, 1);
  V[0] = s.reeb(q);
  D[0] = Mat::Zero(3, 3);
  auto first = [&](int a) { return V[a].dot(g); };
  // X_a X_b delta
  auto second = [&](int a, int b) { return V[a].dot(Hs * V[b]) + (D[b] * V[a]).dot(g); };

  FInvariants f;
  f.F1 = second(1, 1) + second(2, 2);
  f.F2 = -first(2) * second(1, 0) + first(1) * second(2, 0);
  f.F3 = first(0);
  f.F4 = second(0, 0);
  f.F5 = second(0, 1) * second(0, 1) + second(0, 2) * second(0, 2);
  return f;
}

double check_F5_identity(const SRStructure& s, const ScalarField& delta,
                         const std::vector<Vec>& points) {
  double worst = 0.0;
  for (const Vec& q : points) {
    const FInvariants f = heisenberg_F_invariants(s, delta, q);
    worst = std::max(worst, std::abs(f.F5 - f.F2 * f.F2));
  }
  return worst;
}

ScalarField closed_form_delta(const TubeSpec& spec) {
  if (!spec.patch().has_distance()) throw InvalidInput("patch has no closed-form distance");
  const EmbeddedPatch patch = spec.patch();
  return [patch](const Vec& q) { return patch.distance(q); };
}

ScalarField shooting_delta(const TubeSpec& spec, const Vec& anchor, const ODESettings& ode) {
  const InverseResult base = invert_exponential(spec, anchor, ode);
  const int m = spec.codim();
  return [&spec, base, ode, m](const Vec& q) {
    const InverseResult r = invert_exponential_from(spec, q, base.x, base.p, ode);
    if (m == 1) return r.p[0];
    return r.p.norm();
  };
}

}  // namespace srtube
