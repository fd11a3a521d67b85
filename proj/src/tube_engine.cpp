#include "srtube/tube_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "srtube/numdiff.hpp"
#include "srtube/parallel.hpp"

namespace srtube {

void QuadratureSettings::validate(int codim) const {
  if (nodes_x < 4 || nodes_radial < 4) throw InvalidInput("quadrature node counts must be >= 4");
  if (codim >= 2 && nodes_sphere < 4) throw InvalidInput("sphere node count must be >= 4");
  if (threads < 0) throw InvalidInput("thread count must be >= 0");
}

QuadratureSettings QuadratureSettings::scaled(double f) const {
  if (!(f > 0)) throw InvalidInput("quadrature scale must be positive");
  QuadratureSettings q = *this;
  auto sc = [f](int v) { return std::max(1, static_cast<int>(std::lround(v * f))); };
  q.nodes_x = sc(nodes_x);
  q.nodes_radial = sc(nodes_radial);
  q.nodes_sphere = 2 * std::max(1, static_cast<int>(std::lround(0.5 * nodes_sphere * f)));
  return q;
}

TubeSpec::TubeSpec(SRStructure s, EmbeddedPatch patch, ODESettings ode_,
                   QuadratureSettings quad_, int frame_grid)
    : ode(ode_), quad(quad_) {
  ode.validate();
  quad.validate(patch.codim());
  frame_ = std::make_shared<AnnihilatorFrame>(s, patch, frame_grid);
}

std::string TubeSpec::fingerprint() const {
  std::ostringstream os;
  os << structure().name() << "(n=" << dim() << ")/" << patch().name() << "(m=" << codim()
     << ")/quad=" << quad.nodes_x << "," << quad.nodes_sphere << "," << quad.nodes_radial
     << "/ode=" << (ode.method == OdeMethod::Adaptive ? "adaptive" : "fixed") << ","
     << ode.rel_tol << "," << ode.abs_tol;
  return os.str();
}

FiberContext fiber_context(const TubeSpec& spec, const Vec& x, const Mat* reference,
                           bool with_derivatives) {
  const AnnihilatorFrame& fr = spec.frame();
  const Mat& ref = reference ? *reference : fr.reference_near(x);
  FiberContext c;
  c.x = x;
  c.q0 = spec.patch().embed(x);
  c.tangent = spec.patch().tangent(x);
  c.nu = fr.sections_aligned(x, ref);
  if (with_derivatives) c.dnu = fr.section_derivatives_aligned(x, ref);
  const Mat X = spec.structure().fields(c.q0);
  Mat B(spec.dim(), spec.dim());
  B << c.tangent, X * X.transpose() * c.nu.transpose();
  c.orientation = B.determinant() >= 0.0 ? 1.0 : -1.0;
  return c;
}

namespace {

// Advances one trajectory (and optionally its Jacobian columns) in rho.
class Stepper {
 public:
  Stepper(const TubeSpec& spec, const FiberContext& ctx, const Vec& u, const ODESettings& ode,
          bool with_jacobian)
      : spec_(spec), ctx_(ctx), ode_(ode), jac_(with_jacobian) {
    const int n = spec.dim();
    const int k = static_cast<int>(ctx.tangent.cols());
    const int m = spec.codim();
    if (u.size() != m) throw InvalidInput("fiber vector has wrong dimension");
    cur_ = {ctx.q0, ctx.nu.transpose() * u};
    if (jac_) {
      if (static_cast<int>(ctx.dnu.size()) != k) {
        throw InvalidInput("fiber context lacks section derivatives");
      }
      tangents_ = Mat::Zero(2 * n, n);
      for (int j = 0; j < k; ++j) {
        tangents_.col(j).head(n) = ctx.tangent.col(j);
        tangents_.col(j).tail(n) = ctx.dnu[j].transpose() * u;
      }
      for (int i = 0; i < m; ++i) tangents_.col(k + i).tail(n) = ctx.nu.row(i).transpose();
    }
  }

  ExpSample advance(double rho) {
    const double dt = rho - t_;
    if (dt != 0.0) {
      if (jac_) {
        FlowTangents ft = flow_with_tangents(spec_.structure(), cur_, tangents_, dt, ode_);
        cur_ = std::move(ft.end);
        tangents_ = std::move(ft.tangents);
      } else {
        cur_ = flow(spec_.structure(), cur_, dt, ode_);
      }
      t_ = rho;
    }
    ExpSample s;
    s.rho = rho;
    s.point = cur_.q;
    s.density = spec_.structure().measure_density(s.point);
    if (jac_) {
      s.columns = tangents_.topRows(spec_.dim());
      s.jacobian = ctx_.orientation * s.columns.determinant();
      if (!std::isfinite(s.jacobian)) throw NumericalError("non-finite Jacobian determinant");
    }
    return s;
  }

 private:
  const TubeSpec& spec_;
  const FiberContext& ctx_;
  ODESettings ode_;
  bool jac_;
  PhasePoint cur_;
  Mat tangents_;
  double t_ = 0.0;
};

}  // namespace

std::vector<ExpSample> exp_samples(const TubeSpec& spec, const FiberContext& ctx, const Vec& u,
                                   const std::vector<double>& rhos, const ODESettings& ode,
                                   bool with_jacobian) {
  Stepper st(spec, ctx, u, ode, with_jacobian);
  std::vector<ExpSample> out;
  out.reserve(rhos.size());
  for (double r : rhos) out.push_back(st.advance(r));
  return out;
}

Vec normal_exponential(const TubeSpec& spec, const Vec& x, const Vec& p) {
  const FiberContext ctx = fiber_context(spec, x, nullptr, false);
  return exp_samples(spec, ctx, p, {1.0}, spec.ode, false)[0].point;
}

Vec exponential_at_radius(const TubeSpec& spec, const Vec& x, const Vec& u, double r) {
  const FiberContext ctx = fiber_context(spec, x, nullptr, false);
  return exp_samples(spec, ctx, u, {r}, spec.ode, false)[0].point;
}

double radial_jacobian(const TubeSpec& spec, const Vec& x, const Vec& u, double rho) {
  const FiberContext ctx = fiber_context(spec, x);
  return exp_samples(spec, ctx, u, {rho}, spec.ode, true)[0].jacobian;
}

double radial_jacobian_fd(const TubeSpec& spec, const Vec& x, const Vec& u, double rho) {
  const int n = spec.dim();
  const int k = spec.patch().param_dim();
  const int m = spec.codim();
  const ODESettings ode = smooth_ode(spec, std::abs(rho));
  const Mat& ref = spec.frame().reference_near(x);
  const FiberContext base = fiber_context(spec, x, &ref, false);
  auto image = [&](const Vec& xx, const Vec& uu) {
    const FiberContext c = fiber_context(spec, xx, &ref, false);
    return exp_samples(spec, c, uu, {rho}, ode, false)[0].point;
  };
  Mat M(n, n);
  const Vec size = spec.patch().box_size();
  for (int j = 0; j < k; ++j) {
    M.col(j) = central_diff4(
        [&](double t) {
          Vec y = x;
          y[j] += t;
          return image(y, u);
        },
        1e-5 * size[j]);
  }
  for (int i = 0; i < m; ++i) {
    M.col(k + i) = central_diff4(
        [&](double t) {
          Vec v = u;
          v[i] += t;
          return image(x, v);
        },
        1e-5);
  }
  return base.orientation * M.determinant();
}

ODESettings smooth_ode(const TubeSpec& spec, double r) {
  const int m = spec.codim();
  const EmbeddedPatch& patch = spec.patch();
  const Vec x = 0.5 * (patch.lo() + patch.hi());
  const FiberContext ctx = fiber_context(spec, x, nullptr, false);
  ODESettings adaptive = spec.ode;
  adaptive.method = OdeMethod::Adaptive;
  int most = 1;
  for (int i = 0; i < m; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vec u = Vec::Zero(m);
      u[i] = sgn;
      PhasePoint lam{ctx.q0, ctx.nu.transpose() * u};
      Mat xi = Mat::Zero(2 * spec.dim(), 1);
      xi.bottomRows(spec.dim()) = ctx.nu.row(i).transpose();
      FlowTangents ft = flow_with_tangents(spec.structure(), lam, xi, std::abs(r), adaptive);
      most = std::max(most, ft.stats.accepted);
    }
  }
  ODESettings o = spec.ode;
  o.method = OdeMethod::FixedStep;
  o.fixed_steps = std::max(8, static_cast<int>(std::ceil(1.5 * most)));
  return o;
}

namespace {

// Integral of J^rho f / rho over B x U x [0, r].
double tube_integral(const TubeSpec& spec, double r, const PointRule& U) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("radius must be finite and >= 0");
  if (r == 0.0) return 0.0;
  const QuadratureSettings& q = spec.quad;
  const PointRule X = box_rule(spec.patch().lo(), spec.patch().hi(), q.nodes_x);
  const Rule1D R = gauss_legendre(q.nodes_radial, 0.0, r);
  const int nx = X.size(), nu = U.size();

  std::vector<FiberContext> ctx(nx);
  parallel_for(nx, q.threads, [&](int i) { ctx[i] = fiber_context(spec, X.nodes.col(i)); });

  std::vector<double> vals(static_cast<size_t>(nx) * nu);
  parallel_for(nx * nu, q.threads, [&](int t) {
    const int ix = t / nu, iu = t % nu;
    const Vec u = U.nodes.col(iu);
    std::vector<ExpSample> s = exp_samples(spec, ctx[ix], u, R.nodes, spec.ode, true);
    std::vector<double> terms(s.size());
    for (size_t l = 0; l < s.size(); ++l) {
      if (s[l].jacobian < 0.0) {
        std::ostringstream os;
        os << "negative Jacobian at rho = " << s[l].rho
           << " (radius beyond the conjugate radius?)";
        throw NumericalError(os.str());
      }
      double g = s[l].jacobian / s[l].rho;
      if (s[l].rho < 1e-6) {
        // Removable singularity at rho = 0: extrapolate linearly.
        const double a = 2e-6;
        Stepper st(spec, ctx[ix], u, spec.ode, true);
        ExpSample s1 = st.advance(a), s2 = st.advance(2 * a);
        const double g1 = s1.jacobian / a, g2 = s2.jacobian / (2 * a);
        g = g1 + (s[l].rho - a) * (g2 - g1) / a;
      }
      terms[l] = R.weights[l] * g * s[l].density;
    }
    vals[t] = X.weights[ix] * U.weights[iu] * stable_sum(terms);
  });
  return stable_sum(vals);
}

}  // namespace

double tube_volume(const TubeSpec& spec, double r) {
  return tube_integral(spec, r, sphere_rule(spec.codim(), spec.quad.nodes_sphere));
}

double half_tube_volume(const TubeSpec& spec, double r, int side) {
  if (spec.codim() != 1) throw InvalidInput("half tubes need a hypersurface (m = 1)");
  if (!spec.patch().has_co_orientation()) throw InvalidInput("half tube needs a co-orientation");
  if (side != 1 && side != -1) throw InvalidInput("side must be +1 or -1");
  PointRule U;
  U.nodes = Mat::Constant(1, 1, static_cast<double>(side));
  U.weights = {1.0};
  return tube_integral(spec, r, U);
}

VolumeCurve volume_curve(const TubeSpec& spec, const std::vector<double>& radii) {
  VolumeCurve c;
  c.fingerprint = spec.fingerprint();
  for (size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && !(radii[i] > radii[i - 1])) throw InvalidInput("radii must be increasing");
    c.radii.push_back(radii[i]);
    c.volumes.push_back(tube_volume(spec, radii[i]));
  }
  return c;
}

namespace {

struct CellKey {
  std::vector<long long> c;
  bool operator==(const CellKey& o) const { return c == o.c; }
};

struct CellHash {
  size_t operator()(const CellKey& k) const {
    size_t h = 1469598103934665603ull;
    for (long long v : k.c) h = (h ^ static_cast<size_t>(v)) * 1099511628211ull;
    return h;
  }
};

// True if two different ids land within tol of each other.
bool has_collision(const std::vector<Vec>& pts, const std::vector<char>& valid, double tol) {
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells;
  const int n = pts.empty() ? 0 : static_cast<int>(pts[0].size());
  auto key_of = [&](const Vec& q) {
    CellKey k;
    k.c.resize(n);
    for (int a = 0; a < n; ++a) k.c[a] = static_cast<long long>(std::floor(q[a] / tol));
    return k;
  };
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (valid[i]) cells[key_of(pts[i])].push_back(i);
  }
  int neighbours = 1;
  for (int a = 0; a < n; ++a) neighbours *= 3;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (!valid[i]) continue;
    const CellKey base = key_of(pts[i]);
    for (int code = 0; code < neighbours; ++code) {
      CellKey k = base;
      int rest = code;
      for (int a = 0; a < n; ++a) {
        k.c[a] += rest % 3 - 1;
        rest /= 3;
      }
      auto it = cells.find(k);
      if (it == cells.end()) continue;
      for (int j : it->second) {
        if (j != i && (pts[j] - pts[i]).norm() < tol) return true;
      }
    }
  }
  return false;
}

}  // namespace

InjectivityEstimate injectivity_radius_estimate(const TubeSpec& spec, double r_max,
                                                int levels) {
  if (!(r_max > 0) || levels < 2) throw InvalidInput("injectivity scan needs r_max > 0");
  const int m = spec.codim();
  const PointRule X = box_rule(spec.patch().lo(), spec.patch().hi(), spec.quad.nodes_x);
  const PointRule U = sphere_rule(m, spec.quad.nodes_sphere);
  const int nx = X.size(), nu = U.size(), tasks = nx * nu;
  std::vector<double> level(levels);
  for (int l = 0; l < levels; ++l) level[l] = r_max * (l + 1) / levels;

  std::vector<std::vector<Vec>> images(tasks, std::vector<Vec>(levels));
  std::vector<std::vector<char>> ok(tasks, std::vector<char>(levels, 0));
  std::vector<double> jac_fail(tasks, r_max);

  parallel_for(tasks, spec.quad.threads, [&](int t) {
    const int ix = t / nu, iu = t % nu;
    const FiberContext ctx = fiber_context(spec, X.nodes.col(ix));
    const Vec u = U.nodes.col(iu);
    auto scaled = [&](const ExpSample& s) { return s.jacobian / std::pow(s.rho, m); };
    Stepper st(spec, ctx, u, spec.ode, true);
    double prev = 0.0;
    for (int l = 0; l < levels; ++l) {
      ExpSample s;
      try {
        s = st.advance(level[l]);
      } catch (const NumericalError&) {
        jac_fail[t] = level[l];
        return;
      }
      images[t][l] = s.point;
      ok[t][l] = 1;
      if (scaled(s) <= 0.0) {
        double lo = prev, hi = level[l];
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          const ExpSample sm = exp_samples(spec, ctx, u, {mid}, spec.ode, true)[0];
          (scaled(sm) <= 0.0 ? hi : lo) = mid;
        }
        jac_fail[t] = hi;
        return;
      }
      prev = level[l];
    }
  });

  double fail = r_max;
  std::string reason = "none";
  for (double f : jac_fail) {
    if (f < fail) {
      fail = f;
      reason = "jacobian";
    }
  }
  for (int l = 0; l < levels && level[l] < fail; ++l) {
    std::vector<Vec> pts(tasks);
    std::vector<char> valid(tasks);
    for (int t = 0; t < tasks; ++t) {
      valid[t] = ok[t][l];
      if (valid[t]) pts[t] = images[t][l];
    }
    if (has_collision(pts, valid, 1e-6)) {
      fail = level[l];
      reason = "collision";
      break;
    }
  }
  return {0.9 * fail, reason != "none", fail, reason};
}

namespace {

// Newton iteration on (x, p) with the frame aligned to a fixed reference.
std::optional<InverseResult> newton(const TubeSpec& spec, const Vec& target, const Vec& x0,
                                    const Vec& p0, const Mat& ref, const ODESettings& ode) {
  const EmbeddedPatch& patch = spec.patch();
  const int k = patch.param_dim();
  const int n = spec.dim();
  const double scale = 1.0 + target.norm();
  Vec x = x0, p = p0;

  auto eval = [&](const Vec& xx, const Vec& pp) {
    const FiberContext c = fiber_context(spec, xx, &ref, true);
    return exp_samples(spec, c, pp, {1.0}, ode, true)[0];
  };

  ExpSample s;
  try {
    s = eval(x, p);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  double res = (s.point - target).norm();
  for (int it = 0; it < 60; ++it) {
    Eigen::FullPivLU<Mat> lu(s.columns);
    if (lu.rank() < n) return std::nullopt;
    const Vec delta = lu.solve(target - s.point);
    bool accepted = false;
    // Near roundoff only the full step is worth trying.
    const double lam_min = res < 1e-12 * scale ? 0.9 : 1e-3;
    for (double lam = 1.0; lam > lam_min; lam *= 0.5) {
      Vec xn = patch.wrap(x + lam * delta.head(k));
      Vec pn = p + lam * delta.tail(n - k);
      ExpSample sn;
      try {
        sn = eval(xn, pn);
      } catch (const NumericalError&) {
        continue;
      }
      const double rn = (sn.point - target).norm();
      if (rn < res) {
        x = xn;
        p = pn;
        s = std::move(sn);
        res = rn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (!patch.in_extended_box(x)) return std::nullopt;
    if (delta.norm() < 1e-15 * (1.0 + x.norm() + p.norm())) break;
  }
  if (!(res < 1e-9 * scale) || !patch.in_extended_box(x)) return std::nullopt;

  // Re-express p in the frame of sections(x).
  const Mat nu_std = spec.frame().sections(x);
  const Mat nu_fix = spec.frame().sections_aligned(x, ref);
  const Mat Xf = spec.structure().fields(patch.embed(x));
  InverseResult r;
  r.x = x;
  r.p = nu_std * Xf * Xf.transpose() * (nu_fix.transpose() * p);
  r.residual = res;
  return r;
}

}  // namespace

InverseResult invert_exponential_from(const TubeSpec& spec, const Vec& target, const Vec& x0,
                                      const Vec& p0, const ODESettings& ode) {
  const Mat& ref = spec.frame().reference_near(x0);
  auto r = newton(spec, target, x0, p0, ref, ode);
  if (!r) throw NoConvergence("shooting did not converge from the given start");
  return *r;
}

InverseResult invert_exponential(const TubeSpec& spec, const Vec& target, const ODESettings& ode,
                                 int seeds) {
  if (target.size() != spec.dim() || !target.allFinite()) throw InvalidInput("bad target point");
  const auto& nodes = spec.frame().nodes();
  std::vector<double> dist(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    dist[i] = (spec.patch().embed(nodes[i]) - target).norm();
  }
  std::vector<int> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });

  std::vector<InverseResult> found;
  const int batch = std::max(1, seeds);
  for (size_t start = 0; start < order.size() && found.empty(); start += batch) {
    if (start >= static_cast<size_t>(4 * batch)) break;
    for (size_t i = start; i < std::min(order.size(), start + batch); ++i) {
      const Vec& x0 = nodes[order[i]];
      auto r = newton(spec, target, x0, Vec::Zero(spec.codim()),
                      spec.frame().reference_near(x0), ode);
      if (r) found.push_back(*r);
    }
  }
  if (found.empty()) throw NoConvergence("shooting failed from every seed");
  size_t best = 0;
  for (size_t i = 1; i < found.size(); ++i) {
    if (found[i].p.norm() < found[best].p.norm()) best = i;
  }
  InverseResult out = found[best];
  const Vec qb = spec.patch().embed(out.x);
  for (size_t i = 0; i < found.size(); ++i) {
    if (i == best) continue;
    const bool other_point = (spec.patch().embed(found[i].x) - qb).norm() > 1e-6;
    if (other_point && std::abs(found[i].p.norm() - out.p.norm()) < 1e-9) out.ambiguous = true;
  }
  return out;
}

double distance_from_patch(const TubeSpec& spec, const Vec& target, const ODESettings& ode) {
  return invert_exponential(spec, target, ode).p.norm();
}

double eikonal_residual(const TubeSpec& spec, const Vec& target, const ODESettings& ode) {
  const InverseResult base = invert_exponential(spec, target, ode);
  auto delta = [&](const Vec& q) {
    return invert_exponential_from(spec, q, base.x, base.p, ode).p.norm();
  };
  const int n = spec.dim();
  Vec grad(n);
  for (int a = 0; a < n; ++a) {
    grad[a] = central_diff4(
        [&](double t) {
          Vec q = target;
          q[a] += t;
          return delta(q);
        },
        1e-5);
  }
  const Vec h = horizontal_gradient_components(spec.structure(), target, grad);
  return std::abs(h.norm() - 1.0);
}

MonteCarloResult monte_carlo_tube_volume(const TubeSpec& spec, double r, long samples,
                                         unsigned long long seed, int side) {
  const EmbeddedPatch& patch = spec.patch();
  if (!patch.has_distance()) throw InvalidInput("Monte-Carlo needs a closed-form distance");
  if (samples <= 0) throw InvalidInput("sample count must be positive");
  if (side != 0 && spec.codim() != 1) throw InvalidInput("one-sided sampling needs m = 1");
  if (r <= 0.0) return {0.0, 0.0};
  const auto [lo, hi] = patch.distance_bounds(r);
  const int n = spec.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec q(n);
  long inside = 0;
  for (long s = 0; s < samples; ++s) {
    for (int a = 0; a < n; ++a) q[a] = lo[a] + (hi[a] - lo[a]) * unif(rng);
    const double d = patch.distance(q);
    bool in = false;
    if (side == 0) in = std::abs(d) < r;
    if (side > 0) in = d >= 0.0 && d < r;
    if (side < 0) in = d < 0.0 && d > -r;
    inside += in ? 1 : 0;
  }
  const double box = (hi - lo).prod();
  const double frac = static_cast<double>(inside) / samples;
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / samples)};
}

}  // namespace srtube
