#include "srtube/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "srtube/experiments.hpp"
#include "srtube/parallel.hpp"
#include "srtube/weyl_expansion.hpp"

namespace srtube {


namespace {

bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

const std::set<std::string>& block_keys() {
  static const std::set<std::string> k = {
      "structure.name", "structure.dim",    "structure.d",      "patch.name",
      "patch.R",        "patch.L",          "patch.alpha",      "patch.theta",
      "patch.rho",      "patch.family",     "patch.coeffs",     "patch.a",
      "patch.s",        "patch.point",      "ode.method",       "ode.rel_tol",
      "ode.abs_tol",    "ode.max_steps",    "ode.fixed_steps",  "quad.nodes_x",
      "quad.nodes_sphere", "quad.nodes_radial", "frame.grid",   "reference.preset",
      "reference.param"};
  return k;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> s = {"volume",   "monte_carlo", "weyl",      "steiner",
                                             "hotelling", "eikonal",    "roundtrip", "point_jacobian",
                                             "recursion", "f5",         "wlimit"};
  return s;
}

bool is_suite_field(const std::string& f) {
  static const std::set<std::string> k = {"samples", "tol",        "z_max",      "side",
                                          "k_max",   "r0",         "abs_tol",    "rel_tol",
                                          "others_abs", "others_rel", "parity_rel"};
  if (k.count(f)) return true;
  if (f.size() >= 2 && f[0] == 'c') {
    return std::all_of(f.begin() + 1, f.end(), [](char c) { return c >= '0' && c <= '9'; });
  }
  return false;
}

bool is_top_key(const std::string& k) {
  static const std::set<std::string> fixed = {
      "output",       "seed",          "scenes",          "radii.list",      "radii.min",
      "radii.max",    "radii.count",   "tube.side",       "weyl.k_max",      "weyl.r0",
      "weyl.r_max",   "steiner.k_max", "steiner.r0",      "steiner.r_max",   "steiner.side",
      "hotelling.count", "hotelling.r_max", "hotelling.tol", "control.min_deviation",
      "oracle.samples", "oracle.side", "invariants.suites", "invariants.r_max", "invariants.d"};
  if (fixed.count(k)) return true;
  for (const char* p : {"scenario_a.", "scenario_b.", "control."}) {
    if (starts_with(k, p)) {
      const std::string f = k.substr(std::string(p).size());
      return f == "family" || f == "theta" || f == "length" || f == "rho";
    }
  }
  if (starts_with(k, "invariants.")) {
    const std::string rest = k.substr(11);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) return false;
    const std::string suite = rest.substr(0, dot);
    return std::count(suite_names().begin(), suite_names().end(), suite) &&
           is_suite_field(rest.substr(dot + 1));
  }
  return false;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Compact scientific form: 1e-05 -> 1e-5.
std::string brief(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  std::string s = buf;
  for (const char* from : {"e-0", "e+0"}) {
    const auto p = s.find(from);
    if (p != std::string::npos) s.erase(p + 2, 1);
  }
  const auto p = s.find("e+");
  if (p != std::string::npos) s.erase(p + 1, 1);
  return s;
}

std::string hex64(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

ODESettings build_ode(const Config& b) {
  ODESettings o;
  const std::string method = b.str("ode.method", "adaptive");
  if (method == "adaptive") {
    o.method = OdeMethod::Adaptive;
  } else if (method == "fixed") {
    o.method = OdeMethod::FixedStep;
  } else {
    b.fail("ode.method", "expected 'adaptive' or 'fixed', got '" + method + "'");
  }
  o.rel_tol = b.num("ode.rel_tol", o.rel_tol);
  o.abs_tol = b.num("ode.abs_tol", o.abs_tol);
  o.max_steps = b.integer("ode.max_steps", o.max_steps);
  o.fixed_steps = b.integer("ode.fixed_steps", o.fixed_steps);
  try {
    o.validate();
  } catch (const InvalidInput& e) {
    b.fail(b.has("ode.rel_tol") ? "ode.rel_tol" : "ode.method", e.what());
  }
  return o;
}

std::vector<double> radii_from(const Config& c) {
  std::vector<double> r;
  if (c.has("radii.list")) {
    r = c.list("radii.list");
  } else if (c.has("radii.min") || c.has("radii.max") || c.has("radii.count")) {
    const double lo = c.num("radii.min"), hi = c.num("radii.max");
    const int n = c.integer("radii.count");
    if (n < 1) c.fail("radii.count", "must be at least 1");
    for (int i = 0; i < n; ++i) r.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  } else {
    c.fail("radii.list", "required key is missing (or give radii.min, radii.max, radii.count)");
  }
  const std::string key = c.has("radii.list") ? "radii.list" : "radii.min";
  if (r.empty()) c.fail(key, "empty radius grid");
  for (size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0) || (i > 0 && !(r[i] > r[i - 1]))) {
      c.fail(key, "radii must be positive and strictly increasing");
    }
  }
  return r;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  void note(const std::string& line) { notes_.push_back(line); }

  RunResult finish(std::uint64_t hash, unsigned long long seed, bool passed) const {
    std::ostringstream os, sum;
    auto line = [&](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    for (const auto& n : notes_) {
      os << "# " << n << "\n";
      sum << n << "\n";
    }
    os << "# config_hash=" << hex64(hash) << ", seed=" << seed << ", version=" << kVersion << "\n";
    return {os.str(), sum.str(), passed};
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> notes_;
};

struct Item {
  std::string label;
  Config cfg;
  TubeSpec spec;
  std::optional<double> window;
};

// One pass/fail line of the invariant suites.
struct Check {
  std::string suite, scene;
  long samples;
  double residual;
  double bound;
  bool lower = false;  // residual must reach the bound instead of staying below it
  bool pass() const { return lower ? residual >= bound : residual <= bound; }
};

class Runner {
 public:
  Runner(const Config& cfg, const RunOptions& opt, const std::string& sub)
      : cfg_(cfg), opt_(opt) {
    seed_ = opt.seed ? *opt.seed : static_cast<unsigned long long>(cfg.large("seed", 1));
    hash_ = fnv1a(cfg.canonical() + "quad_scale=" + num(opt.quad_scale) + "\nsubcommand=" + sub +
                  "\n");
  }

  RunResult tube_volume();
  RunResult weyl();
  RunResult steiner();
  RunResult hotelling();
  RunResult invariants();
  RunResult oracle();

 private:
  std::vector<std::string> labels() const {
    return cfg_.has("scenes") ? cfg_.words("scenes") : std::vector<std::string>{};
  }
  Config block(const std::string& label) const {
    return label.empty() ? cfg_ : cfg_.overlaid(cfg_.section(label));
  }
  Item single() const {
    if (cfg_.has("scenes") && labels().size() != 1) {
      cfg_.fail("scenes", "this subcommand takes exactly one scene");
    }
    const std::string l = labels().empty() ? std::string() : labels()[0];
    Config b = block(l);
    return {l.empty() ? "main" : l, b, build_tube_spec(b, opt_), std::nullopt};
  }
  std::vector<Item> all() const {
    std::vector<Item> out;
    if (labels().empty()) {
      out.push_back(single());
    } else {
      for (const auto& l : labels()) {
        Config b = block(l);
        out.push_back({l, b, build_tube_spec(b, opt_), std::nullopt});
      }
    }
    return out;
  }
  double window(Item& it) const {
    if (!it.window) {
      it.window = injectivity_radius_estimate(it.spec, cfg_.num("invariants.r_max", 1.0)).radius;
    }
    return *it.window;
  }
  std::mt19937_64 rng(const std::string& tag) const {
    return std::mt19937_64(seed_ ^ fnv1a(tag));
  }
  std::optional<double> reference(const Item& it, double r) const {
    if (!it.cfg.has("reference.preset")) return std::nullopt;
    try {
      return euclidean_reference_volume(it.cfg.str("reference.preset"),
                                        it.cfg.num("reference.param", 1.0), r);
    } catch (const InvalidInput& e) {
      it.cfg.fail("reference.preset", e.what());
    }
  }
  int side_of(const std::string& key, int fallback) const {
    const int s = cfg_.integer(key, fallback);
    if (s < -1 || s > 1) cfg_.fail(key, "side must be -1, 0 or 1");
    return s;
  }
  double volume(const Item& it, double r, int side) const {
    return side == 0 ? srtube::tube_volume(it.spec, r) : half_tube_volume(it.spec, r, side);
  }
  CurveScenario scenario(const std::string& prefix, int d) const {
    try {
      return make_curve_scenario(d, parse_curve_family(cfg_.str(prefix + ".family")),
                                 cfg_.num(prefix + ".theta", 1.0),
                                 cfg_.num(prefix + ".length", 1.0),
                                 cfg_.num(prefix + ".rho", 0.5));
    } catch (const InvalidInput& e) {
      cfg_.fail(prefix + ".family", e.what());
    }
  }
  TubeSpec scenario_spec(const std::string& prefix, const SRStructure& s) const {
    if (s.heisenberg_d() == 0) cfg_.fail("structure.name", "hotelling needs a Heisenberg structure");
    QuadratureSettings q;
    q.nodes_x = cfg_.integer("quad.nodes_x", q.nodes_x);
    q.nodes_sphere = cfg_.integer("quad.nodes_sphere", q.nodes_sphere);
    q.nodes_radial = cfg_.integer("quad.nodes_radial", q.nodes_radial);
    if (opt_.quad_scale != 1.0) q = q.scaled(opt_.quad_scale);
    q.threads = opt_.threads;
    return TubeSpec(s, curve_with_reeb_angle(scenario(prefix, s.heisenberg_d())),
                    build_ode(cfg_), q, cfg_.integer("frame.grid", 0));
  }

  // Invariant suites.
  void suite_volume(Item& it, std::vector<Check>& out);
  void suite_monte_carlo(Item& it, std::vector<Check>& out);
  void suite_coefficients(Item& it, bool steiner, std::vector<Check>& out);
  void suite_hotelling(std::vector<Check>& out);
  void suite_eikonal(Item& it, std::vector<Check>& out);
  void suite_roundtrip(Item& it, std::vector<Check>& out);
  void suite_point_jacobian(const std::vector<Item>& items, std::vector<Check>& out);
  void suite_recursion(Item& it, std::vector<Check>& out);
  void suite_f5(Item& it, std::vector<Check>& out);
  void suite_wlimit(Item& it, std::vector<Check>& out);

  int samples(const std::string& suite, int fallback) const {
    const int n = cfg_.integer("invariants." + suite + ".samples", fallback);
    if (n < 1) cfg_.fail("invariants." + suite + ".samples", "must be at least 1");
    return n;
  }
  double tol(const std::string& suite, double fallback) const {
    return cfg_.num("invariants." + suite + ".tol", fallback);
  }

  struct Sample {
    Vec x, u;
    double r;
  };
  std::vector<Sample> draw(const Item& it, const std::string& tag, int count, double r_lo,
                           double r_hi, bool positive_side) const;

  const Config& cfg_;
  RunOptions opt_;
  unsigned long long seed_;
  std::uint64_t hash_;
};

std::vector<Runner::Sample> Runner::draw(const Item& it, const std::string& tag, int count,
                                         double r_lo, double r_hi, bool positive_side) const {
  auto gen = rng(tag + "/" + it.label);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const EmbeddedPatch& P = it.spec.patch();
  const int m = it.spec.codim();
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.x = Vec(P.param_dim());
    for (int j = 0; j < P.param_dim(); ++j) {
      s.x[j] = P.lo()[j] + (0.1 + 0.8 * uni(gen)) * (P.hi()[j] - P.lo()[j]);
    }
    s.u = Vec(m);
    if (m == 1) {
      s.u[0] = (positive_side || uni(gen) < 0.5) ? 1.0 : -1.0;
    } else {
      for (int j = 0; j < m; ++j) s.u[j] = gauss(gen);
      s.u.normalize();
    }
    s.r = r_lo + (r_hi - r_lo) * uni(gen);
    out.push_back(s);
  }
  return out;
}

RunResult Runner::tube_volume() {
  Item it = single();
  const std::vector<double> radii = radii_from(cfg_);
  const int side = side_of("tube.side", 0);
  const bool with_ref = it.cfg.has("reference.preset");
  std::vector<std::string> head = {"r", "volume"};
  if (with_ref) head.insert(head.end(), {"reference", "rel_error"});
  Table t(head);
  std::vector<double> vols;
  if (side == 0) {
    vols = volume_curve(it.spec, radii).volumes;
  } else {
    for (double r : radii) vols.push_back(half_tube_volume(it.spec, r, side));
  }
  double worst = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    std::vector<std::string> row = {num(radii[i]), num(vols[i])};
    if (with_ref) {
      const double ref = *reference(it, radii[i]);
      const double e = std::abs(vols[i] - ref) / std::abs(ref);
      worst = std::max(worst, e);
      row.insert(row.end(), {num(ref), num(e)});
    }
    t.row(row);
  }
  std::string s = "tube-volume: " + std::to_string(radii.size()) + " radii";
  if (with_ref) s += ", max rel error " + brief(worst);
  t.note(s);
  return t.finish(hash_, seed_, true);
}

RunResult Runner::weyl() {
  Item it = single();
  const int m = it.spec.codim();
  const int k_max = cfg_.integer("weyl.k_max", m + 4);
  const double r0 = cfg_.has("weyl.r0")
                        ? cfg_.num("weyl.r0")
                        : injectivity_radius_estimate(it.spec, cfg_.num("weyl.r_max", 1.0)).radius;
  WeylExpansion w;
  try {
    w = weyl_coefficients(it.spec, k_max, r0);
  } catch (const InvalidInput& e) {
    cfg_.fail("weyl.k_max", e.what());
  }
  Table t({"k", "c_k", "parity", "error"});
  for (size_t i = 0; i < w.c.size(); ++i) {
    t.row({std::to_string(w.k[i]), num(w.c[i]), w.odd[i] ? "odd" : "even", num(w.error[i])});
  }
  t.note("weyl: m = " + std::to_string(m) + ", r0 = " + brief(r0) + ", max odd |c_k| = " +
         brief(w.parity_max()));
  if (w.step_warning) t.note("warning: finest Richardson levels disagree by more than 1e-7 |c_m|");
  return t.finish(hash_, seed_, true);
}

RunResult Runner::steiner() {
  Item it = single();
  const int k_max = cfg_.integer("steiner.k_max", 4);
  const int side = side_of("steiner.side", 1);
  if (side == 0) cfg_.fail("steiner.side", "side must be -1 or 1");
  const double r0 =
      cfg_.has("steiner.r0")
          ? cfg_.num("steiner.r0")
          : injectivity_radius_estimate(it.spec, cfg_.num("steiner.r_max", 1.0)).radius;
  WeylExpansion w;
  try {
    w = steiner_coefficients(it.spec, k_max, r0, side);
  } catch (const InvalidInput& e) {
    cfg_.fail("steiner.k_max", e.what());
  }
  Table t({"k", "c_k", "error"});
  for (size_t i = 0; i < w.c.size(); ++i) {
    t.row({std::to_string(w.k[i]), num(w.c[i]), num(w.error[i])});
  }
  t.note("steiner: side = " + std::to_string(side) + ", r0 = " + brief(r0));
  if (w.step_warning) t.note("warning: finest Richardson levels disagree by more than 1e-7 |c_1|");
  return t.finish(hash_, seed_, true);
}

RunResult Runner::hotelling() {
  const SRStructure s = build_structure(cfg_);
  const TubeSpec a = scenario_spec("scenario_a", s);
  const TubeSpec b = scenario_spec("scenario_b", s);
  const int count = cfg_.integer("hotelling.count", 8);
  if (count < 1) cfg_.fail("hotelling.count", "must be at least 1");
  const double r_max = cfg_.num("hotelling.r_max", 1.0);
  const double tol = cfg_.num("hotelling.tol", 1e-5);
  const HotellingReport rep = hotelling_compare(a, b, count, r_max);
  const bool control = cfg_.has("control.family");

  std::vector<std::string> head = {"r", "volume_a", "volume_b", "deviation"};
  if (control) head.insert(head.end(), {"volume_control", "control_deviation"});
  Table t(head);
  double cdev = 0.0;
  std::optional<TubeSpec> c;
  if (control) {
    c.emplace(scenario_spec("control", s));
    const InjectivityEstimate inj = injectivity_radius_estimate(*c, r_max);
    if (rep.window > 0.5 * inj.radius) {
      throw NumericalError("control injectivity estimate " + brief(inj.radius) +
                           " is below the comparison window");
    }
  }
  for (size_t i = 0; i < rep.radii.size(); ++i) {
    const double va = rep.volume_a[i], vb = rep.volume_b[i];
    std::vector<std::string> row = {num(rep.radii[i]), num(va), num(vb),
                                    num(std::abs(va - vb) / std::abs(va))};
    if (control) {
      const double vc = srtube::tube_volume(*c, rep.radii[i]);
      const double dv = std::abs(va - vc) / std::abs(va);
      cdev = std::max(cdev, dv);
      row.insert(row.end(), {num(vc), num(dv)});
    }
    t.row(row);
  }
  auto est = [](const InjectivityEstimate& e) {
    return brief(e.radius) + (e.certified ? " (" + e.reason + ")" : " (no failure below r_max)");
  };
  t.note("window = " + brief(rep.window) + ", injectivity estimates " + est(rep.inj_a) + ", " +
         est(rep.inj_b));
  const bool ok = rep.max_deviation < tol;
  t.note("max deviation < " + brief(tol) + ": " + (ok ? "PASS" : "FAIL") + " (" +
         brief(rep.max_deviation) + ")");
  bool cok = true;
  if (control) {
    const double min_dev = cfg_.num("control.min_deviation", 1e-2);
    cok = cdev >= min_dev;
    t.note("control deviation >= " + brief(min_dev) + ": " + (cok ? "PASS" : "FAIL") + " (" +
           brief(cdev) + ")");
  }
  return t.finish(hash_, seed_, ok && cok);
}

RunResult Runner::oracle() {
  Item it = single();
  const std::vector<double> radii = radii_from(cfg_);
  const int side = side_of("oracle.side", 0);
  const long long n = cfg_.large("oracle.samples", 1000000);
  if (n < 2) cfg_.fail("oracle.samples", "need at least 2 samples");
  if (!it.spec.patch().has_distance()) {
    it.cfg.fail("patch.name", "the Monte-Carlo oracle needs a patch with a closed-form distance");
  }
  const bool with_ref = it.cfg.has("reference.preset");
  std::vector<std::string> head = {"r", "quadrature", "monte_carlo", "stderr", "z_score"};
  if (with_ref) head.insert(head.end(), {"reference", "rel_error"});
  Table t(head);
  double zmax = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    const double q = volume(it, radii[i], side);
    const MonteCarloResult mc = monte_carlo_tube_volume(it.spec, radii[i], n, seed_ + i, side);
    const double z = std::abs(q - mc.value) / mc.stderr_;
    zmax = std::max(zmax, z);
    std::vector<std::string> row = {num(radii[i]), num(q), num(mc.value), num(mc.stderr_), num(z)};
    if (with_ref) {
      const double ref = *reference(it, radii[i]);
      row.insert(row.end(), {num(ref), num(std::abs(q - ref) / std::abs(ref))});
    }
    t.row(row);
  }
  t.note("oracle: " + std::to_string(n) + " samples per radius, max z-score " + brief(zmax));
  return t.finish(hash_, seed_, true);
}

void Runner::suite_volume(Item& it, std::vector<Check>& out) {
  if (!it.cfg.has("reference.preset")) {
    cfg_.fail("invariants.suites", "volume suite needs reference.preset for scene " + it.label);
  }
  const std::vector<double> radii = radii_from(cfg_);
  const int side = side_of("tube.side", 0);
  double worst = 0.0;
  for (double r : radii) {
    const double ref = *reference(it, r);
    worst = std::max(worst, std::abs(volume(it, r, side) - ref) / std::abs(ref));
  }
  out.push_back({"volume", it.label, static_cast<long>(radii.size()), worst, tol("volume", 1e-6)});
}

void Runner::suite_monte_carlo(Item& it, std::vector<Check>& out) {
  const std::vector<double> radii = radii_from(cfg_);
  const int side = side_of("invariants.monte_carlo.side", cfg_.integer("tube.side", 0));
  const long long n = cfg_.large("invariants.monte_carlo.samples", 1000000);
  double zmax = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    const double q = volume(it, radii[i], side);
    const MonteCarloResult mc = monte_carlo_tube_volume(it.spec, radii[i], n, seed_ + i, side);
    zmax = std::max(zmax, std::abs(q - mc.value) / mc.stderr_);
  }
  out.push_back({"monte_carlo", it.label, static_cast<long>(n * radii.size()), zmax,
                 cfg_.num("invariants.monte_carlo.z_max", 3.0)});
}

void Runner::suite_coefficients(Item& it, bool steiner, std::vector<Check>& out) {
  const std::string name = steiner ? "steiner" : "weyl";
  const std::string pre = "invariants." + name + ".";
  const int m = it.spec.codim();
  const double r0 = cfg_.has(pre + "r0") ? cfg_.num(pre + "r0") : window(it);
  WeylExpansion w;
  try {
    if (steiner) {
      w = steiner_coefficients(it.spec, cfg_.integer(pre + "k_max", 4), r0,
                               cfg_.integer(pre + "side", 1));
    } else {
      w = weyl_coefficients(it.spec, cfg_.integer(pre + "k_max", m + 4), r0);
    }
  } catch (const InvalidInput& e) {
    cfg_.fail(pre + "k_max", e.what());
  }
  const double abs_tol = cfg_.num(pre + "abs_tol", 0.0);
  const double rel_tol = cfg_.num(pre + "rel_tol", 0.0);
  const double lead = std::abs(w.c[0]);
  double others = 0.0;
  bool any_other = false;
  for (size_t i = 0; i < w.c.size(); ++i) {
    const std::string key = pre + "c" + std::to_string(w.k[i]);
    if (cfg_.has(key)) {
      if (abs_tol <= 0.0 && rel_tol <= 0.0) cfg_.fail(key, "needs abs_tol or rel_tol");
      const double e = cfg_.num(key);
      // Report the error in the units of the tolerance that applies.
      const bool rel = rel_tol * std::abs(e) >= abs_tol;
      const double err = std::abs(w.c[i] - e);
      out.push_back({name + ".c" + std::to_string(w.k[i]), it.label, 1,
                     rel ? err / std::abs(e) : err, rel ? rel_tol : abs_tol});
    } else {
      others = std::max(others, std::abs(w.c[i]));
      any_other = true;
    }
  }
  if (any_other && cfg_.has(pre + "others_abs")) {
    out.push_back({name + ".others", it.label, 1, others, cfg_.num(pre + "others_abs")});
  }
  if (any_other && cfg_.has(pre + "others_rel")) {
    out.push_back({name + ".others_rel", it.label, 1, others / lead, cfg_.num(pre + "others_rel")});
  }
  if (!steiner && cfg_.has(pre + "parity_rel")) {
    out.push_back({name + ".parity", it.label, 1, w.parity_max() / lead,
                   cfg_.num(pre + "parity_rel")});
  }
}

void Runner::suite_hotelling(std::vector<Check>& out) {
  const SRStructure s = build_structure(cfg_);
  const TubeSpec a = scenario_spec("scenario_a", s);
  const TubeSpec b = scenario_spec("scenario_b", s);
  const int count = cfg_.integer("hotelling.count", 8);
  const double r_max = cfg_.num("hotelling.r_max", 1.0);
  const HotellingReport rep = hotelling_compare(a, b, count, r_max);
  out.push_back({"hotelling", "a/b", count, rep.max_deviation, cfg_.num("hotelling.tol", 1e-5)});
  if (cfg_.has("control.family")) {
    const TubeSpec c = scenario_spec("control", s);
    const HotellingReport neg = hotelling_compare(a, c, count, r_max);
    out.push_back({"hotelling.control", "a/control", count, neg.max_deviation,
                   cfg_.num("control.min_deviation", 1e-2), true});
  }
}

void Runner::suite_eikonal(Item& it, std::vector<Check>& out) {
  const double w = window(it);
  const auto pts = draw(it, "eikonal", samples("eikonal", 70), 0.1 * w, 0.5 * w, false);
  std::vector<double> res(pts.size());
  parallel_for(static_cast<int>(pts.size()), opt_.threads, [&](int i) {
    const Vec q = exponential_at_radius(it.spec, pts[i].x, pts[i].u, pts[i].r);
    res[i] = eikonal_residual(it.spec, q, it.spec.ode);
  });
  out.push_back({"eikonal", it.label, static_cast<long>(pts.size()),
                 *std::max_element(res.begin(), res.end()), tol("eikonal", 1e-5)});
}

void Runner::suite_roundtrip(Item& it, std::vector<Check>& out) {
  const double w = window(it);
  const auto pts = draw(it, "roundtrip", samples("roundtrip", 250), 0.1 * w, 0.8 * w, false);
  const EmbeddedPatch& P = it.spec.patch();
  std::vector<double> rt(pts.size()), dist(pts.size());
  parallel_for(static_cast<int>(pts.size()), opt_.threads, [&](int i) {
    const Sample& s = pts[i];
    const Vec q = exponential_at_radius(it.spec, s.x, s.u, s.r);
    const InverseResult inv = invert_exponential(it.spec, q, it.spec.ode);
    Vec dx = inv.x - s.x;
    for (int j = 0; j < dx.size(); ++j) {
      if (P.periodic(j)) dx[j] = std::remainder(dx[j], P.hi()[j] - P.lo()[j]);
    }
    rt[i] = std::max(dx.norm(), (inv.p - s.r * s.u).norm());
    dist[i] = std::abs(inv.p.norm() - s.r);
  });
  const long n = static_cast<long>(pts.size());
  out.push_back({"roundtrip", it.label, n, *std::max_element(rt.begin(), rt.end()),
                 tol("roundtrip", 1e-8)});
  out.push_back({"distance", it.label, n, *std::max_element(dist.begin(), dist.end()),
                 tol("roundtrip", 1e-8)});
}

void Runner::suite_point_jacobian(const std::vector<Item>& items, std::vector<Check>& out) {
  int d = cfg_.str("structure.name", "") == "heisenberg" ? cfg_.integer("structure.d", 1) : 1;
  for (const auto& it : items) {
    if (it.spec.structure().heisenberg_d() > 0) {
      d = it.spec.structure().heisenberg_d();
      break;
    }
  }
  d = cfg_.integer("invariants.d", d);
  if (d < 1) cfg_.fail("invariants.d", "must be at least 1");
  struct P {
    Vec px;
    double pz;
  };
  std::vector<P> grid;
  int idx = 0;
  for (double norm : {0.5, 1.0, 2.0}) {
    for (int k = 0; k <= 45; ++k, ++idx) {
      Vec px = Vec::Zero(2 * d);
      // Spread the directions of p_x over all coordinates.
      for (int a = 0; a < 2 * d; ++a) px[a] = std::cos(0.7 * idx + 1.3 * a);
      px *= norm / px.norm();
      grid.push_back({px, 0.5 + 0.1 * k});
    }
  }
  std::vector<double> rel(grid.size()), par(grid.size());
  const ODESettings ode = items.empty() ? ODESettings{} : items.front().spec.ode;
  parallel_for(static_cast<int>(grid.size()), opt_.threads, [&](int i) {
    const double closed = heisenberg_point_jacobian(d, grid[i].px, grid[i].pz);
    const double flow = heisenberg_point_jacobian_flow(d, grid[i].px, grid[i].pz, ode);
    rel[i] = std::abs(flow - closed) / std::abs(closed);
    par[i] = std::abs(heisenberg_point_jacobian(d, -grid[i].px, -grid[i].pz) - closed);
  });
  const long n = static_cast<long>(grid.size());
  out.push_back({"point_jacobian", "H" + std::to_string(2 * d + 1), n,
                 *std::max_element(rel.begin(), rel.end()), tol("point_jacobian", 1e-8)});
  out.push_back({"point_jacobian.parity", "H" + std::to_string(2 * d + 1), n,
                 *std::max_element(par.begin(), par.end()), 0.0});
}

void Runner::suite_recursion(Item& it, std::vector<Check>& out) {
  if (!it.spec.patch().has_distance()) {
    cfg_.fail("invariants.suites", "recursion suite needs a closed-form distance (scene " +
                                       it.label + ")");
  }
  const double w = window(it);
  const auto pts = draw(it, "recursion", samples("recursion", 25), 0.2 * w, 0.6 * w, true);
  const ScalarField delta = closed_form_delta(it.spec);
  const int wexp = it.spec.codim() - 1;
  std::vector<double> res(pts.size());
  parallel_for(static_cast<int>(pts.size()), opt_.threads, [&](int i) {
    const Vec q = exponential_at_radius(it.spec, pts[i].x, pts[i].u, pts[i].r);
    const double a = iterated_divergence(it.spec.structure(), delta, wexp, q, 2).values[2];
    const double b = iterated_divergence_flux(it.spec.structure(), delta, wexp, q, 2).values[2];
    res[i] = std::abs(a - b) / std::max(1.0, std::abs(b));
  });
  out.push_back({"recursion", it.label, static_cast<long>(pts.size()),
                 *std::max_element(res.begin(), res.end()), tol("recursion", 1e-5)});
}

void Runner::suite_f5(Item& it, std::vector<Check>& out) {
  const SRStructure& s = it.spec.structure();
  if (s.heisenberg_d() != 1) {
    cfg_.fail("invariants.suites", "f5 suite needs the Heisenberg group H_3 (scene " + it.label +
                                       ")");
  }
  const double w = window(it);
  const auto pts = draw(it, "f5", samples("f5", 100), 0.1 * w, 0.5 * w, false);
  std::vector<double> f5(pts.size()), rot(pts.size());
  parallel_for(static_cast<int>(pts.size()), opt_.threads, [&](int i) {
    const Vec q = exponential_at_radius(it.spec, pts[i].x, pts[i].u, pts[i].r);
    const ScalarField delta = shooting_delta(it.spec, q, it.spec.ode);
    const FInvariants f = heisenberg_F_invariants(s, delta, q);
    f5[i] = std::abs(f.F5 - f.F2 * f.F2);
    const FInvariants g = heisenberg_F_invariants(s, delta, q, 0.3 + 2.0 * i / pts.size());
    rot[i] = std::max({std::abs(f.F1 - g.F1), std::abs(f.F2 - g.F2), std::abs(f.F3 - g.F3),
                       std::abs(f.F4 - g.F4)});
  });
  const long n = static_cast<long>(pts.size());
  out.push_back({"f5", it.label, n, *std::max_element(f5.begin(), f5.end()), tol("f5", 1e-5)});
  out.push_back({"f5.rotation", it.label, n, *std::max_element(rot.begin(), rot.end()), 1e-8});
}

void Runner::suite_wlimit(Item& it, std::vector<Check>& out) {
  if (!it.spec.patch().has_distance()) {
    cfg_.fail("invariants.suites", "wlimit suite needs a closed-form distance (scene " +
                                       it.label + ")");
  }
  const double r0 = cfg_.has("invariants.wlimit.r0") ? cfg_.num("invariants.wlimit.r0")
                                                     : window(it);
  const auto pts = draw(it, "wlimit", samples("wlimit", 6), 0.0, 0.0, false);
  const ScalarField delta = closed_form_delta(it.spec);
  std::vector<double> res(2 * pts.size());
  parallel_for(static_cast<int>(res.size()), opt_.threads, [&](int t) {
    const Sample& s = pts[t / 2];
    const int j = 1 + t % 2;
    const double lim = w_limit(it.spec, delta, s.x, s.u, j, r0).limit;
    res[t] = std::abs(lim - w_function(it.spec, s.x, s.u, j, r0));
  });
  out.push_back({"wlimit", it.label, static_cast<long>(res.size()),
                 *std::max_element(res.begin(), res.end()), tol("wlimit", 1e-4)});
}

RunResult Runner::invariants() {
  std::vector<std::string> suites = cfg_.has("invariants.suites")
                                        ? cfg_.words("invariants.suites")
                                        : std::vector<std::string>{"all"};
  if (std::count(suites.begin(), suites.end(), "all")) {
    suites = {"eikonal", "roundtrip", "point_jacobian", "recursion", "f5", "wlimit"};
  }
  for (const auto& s : suites) {
    if (!std::count(suite_names().begin(), suite_names().end(), s)) {
      cfg_.fail("invariants.suites", "unknown suite '" + s + "'");
    }
  }
  std::vector<Item> items;
  const bool needs_scenes = std::any_of(suites.begin(), suites.end(), [](const std::string& s) {
    return s != "hotelling" && s != "point_jacobian";
  });
  if (needs_scenes) items = all();

  std::vector<Check> checks;
  for (const auto& s : suites) {
    if (s == "hotelling") {
      suite_hotelling(checks);
    } else if (s == "point_jacobian") {
      suite_point_jacobian(items, checks);
    } else {
      for (auto& it : items) {
        if (s == "volume") suite_volume(it, checks);
        if (s == "monte_carlo") suite_monte_carlo(it, checks);
        if (s == "weyl") suite_coefficients(it, false, checks);
        if (s == "steiner") suite_coefficients(it, true, checks);
        if (s == "eikonal") suite_eikonal(it, checks);
        if (s == "roundtrip") suite_roundtrip(it, checks);
        if (s == "recursion") suite_recursion(it, checks);
        if (s == "f5") suite_f5(it, checks);
        if (s == "wlimit") suite_wlimit(it, checks);
      }
    }
  }
  Table t({"suite", "scene", "samples", "residual", "bound", "status"});
  bool ok = true;
  for (const auto& c : checks) {
    const std::string bound = (c.lower ? ">=" : "<=") + brief(c.bound);
    const char* status = c.pass() ? "PASS" : "FAIL";
    ok = ok && c.pass();
    t.row({c.suite, c.scene, std::to_string(c.samples), num(c.residual), bound, status});
    t.note(c.suite + " [" + c.scene + "]: " + brief(c.residual) + " " + bound + " over " +
           std::to_string(c.samples) + " samples: " + status);
  }
  t.note(std::string("invariants: ") + (ok ? "PASS" : "FAIL"));
  return t.finish(hash_, seed_, ok);
}

}  // namespace

SRStructure build_structure(const Config& b) {
  const std::string name = b.str("structure.name");
  if (name == "euclidean") {
    const int n = b.integer("structure.dim", 3);
    if (n < 1 || n > 16) b.fail("structure.dim", "must lie in [1, 16]");
    return SRStructure::euclidean(n);
  }
  if (name == "heisenberg") {
    const int d = b.integer("structure.d", 1);
    if (d < 1 || d > 8) b.fail("structure.d", "must lie in [1, 8]");
    return SRStructure::heisenberg(d);
  }
  b.fail("structure.name", "unknown structure '" + name + "' (euclidean, heisenberg)");
}

EmbeddedPatch build_patch(const Config& b, const SRStructure& s) {
  const std::string name = b.str("patch.name");
  const int n = s.dim();
  auto need_r3 = [&] {
    if (n != 3) b.fail("patch.name", name + " needs a 3-dimensional structure");
  };
  try {
    if (name == "circle") {
      need_r3();
      return presets::circle(b.num("patch.R", 1.0));
    }
    if (name == "sphere") {
      need_r3();
      return presets::sphere(b.num("patch.R", 1.0));
    }
    if (name == "segment") return presets::segment_z(n, b.num("patch.L", 1.0));
    if (name == "plane") {
      need_r3();
      return presets::vertical_plane(b.num("patch.s", 1.0));
    }
    if (name == "graph") {
      need_r3();
      return presets::graph2d(b.list("patch.coeffs"), b.num("patch.a", 0.5));
    }
    if (name == "point") {
      const Vec p = to_vec(b.list("patch.point"));
      if (p.size() != n) b.fail("patch.point", "needs " + std::to_string(n) + " coordinates");
      return presets::point(p);
    }
    if (name == "line" || name == "helix" || name == "z-axis" || name == "curve") {
      if (s.heisenberg_d() == 0) b.fail("patch.name", name + " needs structure.name = heisenberg");
      const CurveFamily fam =
          parse_curve_family(name == "curve" ? b.str("patch.family") : name);
      double theta = 1.0;
      if (b.has("patch.theta")) {
        theta = b.num("patch.theta");
      } else if (b.has("patch.alpha")) {
        theta = std::sin(b.num("patch.alpha"));
      } else if (fam != CurveFamily::ZAxis) {
        b.fail("patch.theta", "required key is missing");
      }
      return curve_with_reeb_angle(make_curve_scenario(s.heisenberg_d(), fam, theta,
                                                       b.num("patch.L", 1.0),
                                                       b.num("patch.rho", 0.5)));
    }
  } catch (const InvalidInput& e) {
    b.fail("patch.name", e.what());
  }
  b.fail("patch.name", "unknown patch preset '" + name +
                           "' (circle, sphere, segment, plane, graph, point, line, helix, "
                           "z-axis, curve)");
}

TubeSpec build_tube_spec(const Config& b, const RunOptions& opt) {
  const SRStructure s = build_structure(b);
  EmbeddedPatch patch = build_patch(b, s);
  QuadratureSettings q;
  q.nodes_x = b.integer("quad.nodes_x", q.nodes_x);
  q.nodes_sphere = b.integer("quad.nodes_sphere", q.nodes_sphere);
  q.nodes_radial = b.integer("quad.nodes_radial", q.nodes_radial);
  if (!(opt.quad_scale > 0.0)) throw InvalidInput("quad scale must be positive");
  if (opt.quad_scale != 1.0) q = q.scaled(opt.quad_scale);
  q.threads = opt.threads;
  try {
    q.validate(patch.codim());
  } catch (const InvalidInput& e) {
    b.fail(b.has("quad.nodes_x") ? "quad.nodes_x" : "patch.name", e.what());
  }
  return TubeSpec(s, std::move(patch), build_ode(b), q, b.integer("frame.grid", 0));
}

Scene::Scene(Config cfg) : cfg_(std::move(cfg)) {
  const std::vector<std::string> labels =
      cfg_.has("scenes") ? cfg_.words("scenes") : std::vector<std::string>{};
  for (const auto& l : labels) {
    static const std::set<std::string> reserved = {
        "structure", "patch",     "ode",        "quad",       "frame",      "reference",
        "radii",     "tube",      "weyl",       "steiner",    "hotelling",  "oracle",
        "invariants", "scenario_a", "scenario_b", "control", "output", "seed", "scenes"};
    if (reserved.count(l)) {
      cfg_.fail("scenes", "scene label '" + l + "' clashes with a section name");
    }
  }
  cfg_.require_known([&](const std::string& k) {
    if (block_keys().count(k) || is_top_key(k)) return true;
    for (const auto& l : labels) {
      if (starts_with(k, l + ".") && block_keys().count(k.substr(l.size() + 1))) return true;
    }
    return false;
  });
}

const std::vector<std::string>& Scene::subcommands() {
  static const std::vector<std::string> s = {"tube-volume", "weyl",       "steiner",
                                             "hotelling",   "invariants", "oracle"};
  return s;
}

RunResult Scene::run(const std::string& sub, const RunOptions& opt) const {
  if (!(opt.quad_scale > 0.0) || !std::isfinite(opt.quad_scale)) {
    throw ConfigError("--quad-scale must be a positive number");
  }
  if (opt.threads < 0) throw ConfigError("--threads must be non-negative");
  Runner r(cfg_, opt, sub);
  if (sub == "tube-volume") return r.tube_volume();
  if (sub == "weyl") return r.weyl();
  if (sub == "steiner") return r.steiner();
  if (sub == "hotelling") return r.hotelling();
  if (sub == "invariants") return r.invariants();
  if (sub == "oracle") return r.oracle();
  throw ConfigError("unknown subcommand '" + sub + "'");
}

}  // namespace srtube
