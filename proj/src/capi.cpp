#include "srtube/srtube.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "srtube/experiments.hpp"
#include "srtube/scene.hpp"
#include "srtube/weyl_expansion.hpp"

using namespace srtube;

struct srt_structure {
  SRStructure s;
};
struct srt_patch {
  EmbeddedPatch p;
};
struct srt_tube {
  TubeSpec spec;
};
struct srt_scene {
  Scene scene;
};

namespace {

thread_local std::string last_error;

template <class F>
srt_status guard(F&& f) noexcept {
  try {
    f();
    last_error.clear();
    return SRT_OK;
  } catch (const ConfigError& e) {
    last_error = e.what();
    return SRT_ERR_CONFIG;
  } catch (const InvalidInput& e) {
    last_error = e.what();
    return SRT_ERR_INVALID;
  } catch (const NumericalError& e) {
    last_error = e.what();
    return SRT_ERR_NUMERICAL;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SRT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SRT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return SRT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw InvalidInput(std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ODESettings ode_from(const srt_ode* o) {
  ODESettings s;
  if (!o) return s;
  s.method = o->adaptive ? OdeMethod::Adaptive : OdeMethod::FixedStep;
  s.rel_tol = o->rel_tol;
  s.abs_tol = o->abs_tol;
  s.max_steps = o->max_steps;
  s.fixed_steps = o->fixed_steps;
  s.validate();
  return s;
}

Vec in(const double* p, int n) {
  need(p, "input array");
  return Eigen::Map<const Vec>(p, n);
}

void out(double* dst, const Vec& v) {
  need(dst, "output array");
  Eigen::Map<Vec>(dst, v.size()) = v;
}

class CallbackModel : public FrameModel {
 public:
  CallbackModel(int n, int count, srt_fields_fn f, void* user)
      : n_(n), count_(count), f_(f), user_(user) {}
  int dim() const override { return n_; }
  int count() const override { return count_; }
  void fields(const Vec& q, Mat& X) const override {
    X.resize(n_, count_);
    f_(user_, q.data(), X.data());
  }

 private:
  int n_, count_;
  srt_fields_fn f_;
  void* user_;
};

}  // namespace

extern "C" {

const char* srt_version(void) { return kVersion; }

const char* srt_last_error(void) { return last_error.c_str(); }

void srt_string_free(char* s) { std::free(s); }

void srt_ode_defaults(srt_ode* o) {
  if (!o) return;
  const ODESettings s;
  *o = {1, s.rel_tol, s.abs_tol, s.max_steps, s.fixed_steps};
}

void srt_quadrature_defaults(srt_quadrature* q) {
  if (!q) return;
  const QuadratureSettings s;
  *q = {s.nodes_x, s.nodes_sphere, s.nodes_radial, s.threads};
}

void srt_run_options_defaults(srt_run_options* o) {
  if (!o) return;
  *o = {0, 0, 0, 1.0};
}

srt_status srt_structure_euclidean(int n, srt_structure** o) {
  return guard([&] {
    need(o, "out");
    if (n < 1) throw InvalidInput("dimension must be positive");
    *o = new srt_structure{SRStructure::euclidean(n)};
  });
}

srt_status srt_structure_heisenberg(int d, srt_structure** o) {
  return guard([&] {
    need(o, "out");
    if (d < 1) throw InvalidInput("d must be positive");
    *o = new srt_structure{SRStructure::heisenberg(d)};
  });
}

srt_status srt_structure_custom(int n, int count, srt_fields_fn fields, void* user,
                                srt_structure** o) {
  return guard([&] {
    need(o, "out");
    need(reinterpret_cast<const void*>(fields), "fields callback");
    if (n < 1 || count < 1) throw InvalidInput("dimension and field count must be positive");
    auto model = std::make_shared<CallbackModel>(n, count, fields, user);
    *o = new srt_structure{SRStructure(model, "custom", Vec::Constant(n, -1e6),
                                       Vec::Constant(n, 1e6))};
  });
}

void srt_structure_free(srt_structure* s) { delete s; }

srt_status srt_structure_dim(const srt_structure* s, int* n) {
  return guard([&] {
    need(s, "structure");
    need(n, "out");
    *n = s->s.dim();
  });
}

srt_status srt_hamiltonian(const srt_structure* s, const double* q, const double* p, double* h) {
  return guard([&] {
    need(s, "structure");
    need(h, "out");
    const int n = s->s.dim();
    *h = hamiltonian(s->s, {in(q, n), in(p, n)});
  });
}

srt_status srt_flow(const srt_structure* s, const double* q, const double* p, double t,
                    const srt_ode* ode, double* q_out, double* p_out) {
  return guard([&] {
    need(s, "structure");
    const int n = s->s.dim();
    const PhasePoint end = flow(s->s, {in(q, n), in(p, n)}, t, ode_from(ode));
    out(q_out, end.q);
    out(p_out, end.p);
  });
}

srt_status srt_patch_circle(double R, srt_patch** o) {
  return guard([&] {
    need(o, "out");
    *o = new srt_patch{presets::circle(R)};
  });
}

srt_status srt_patch_sphere(double R, srt_patch** o) {
  return guard([&] {
    need(o, "out");
    *o = new srt_patch{presets::sphere(R)};
  });
}

srt_status srt_patch_segment(int n, double L, srt_patch** o) {
  return guard([&] {
    need(o, "out");
    *o = new srt_patch{presets::segment_z(n, L)};
  });
}

srt_status srt_patch_curve(int d, const char* family, double theta, double L, double rho,
                           srt_patch** o) {
  return guard([&] {
    need(o, "out");
    need(family, "family");
    *o = new srt_patch{
        curve_with_reeb_angle(make_curve_scenario(d, parse_curve_family(family), theta, L, rho))};
  });
}

srt_status srt_patch_custom(int n, int k, const double* lo, const double* hi, srt_embed_fn embed,
                            void* user, srt_patch** o) {
  return guard([&] {
    need(o, "out");
    need(reinterpret_cast<const void*>(embed), "embed callback");
    if (k < 0 || n < 1) throw InvalidInput("bad patch dimensions");
    const Vec l = k ? in(lo, k) : Vec(), h = k ? in(hi, k) : Vec();
    auto f = [n, embed, user](const Vec& x) {
      Vec q(n);
      embed(user, x.data(), q.data());
      return q;
    };
    *o = new srt_patch{EmbeddedPatch(n, l, h, f, {}, "custom")};
  });
}

void srt_patch_free(srt_patch* p) { delete p; }

srt_status srt_tube_create(const srt_structure* s, const srt_patch* p, const srt_ode* ode,
                           const srt_quadrature* quad, srt_tube** o) {
  return guard([&] {
    need(s, "structure");
    need(p, "patch");
    need(o, "out");
    QuadratureSettings q;
    if (quad) {
      q.nodes_x = quad->nodes_x;
      q.nodes_sphere = quad->nodes_sphere;
      q.nodes_radial = quad->nodes_radial;
      q.threads = quad->threads;
    }
    *o = new srt_tube{TubeSpec(s->s, p->p, ode_from(ode), q)};
  });
}

void srt_tube_free(srt_tube* t) { delete t; }

srt_status srt_tube_codim(const srt_tube* t, int* m) {
  return guard([&] {
    need(t, "tube");
    need(m, "out");
    *m = t->spec.codim();
  });
}

srt_status srt_tube_volume(const srt_tube* t, double r, double* v) {
  return guard([&] {
    need(t, "tube");
    need(v, "out");
    *v = tube_volume(t->spec, r);
  });
}

srt_status srt_tube_half_volume(const srt_tube* t, double r, int side, double* v) {
  return guard([&] {
    need(t, "tube");
    need(v, "out");
    *v = half_tube_volume(t->spec, r, side);
  });
}

srt_status srt_tube_exponential(const srt_tube* t, const double* x, const double* u, double r,
                                double* q_out) {
  return guard([&] {
    need(t, "tube");
    const int k = t->spec.patch().param_dim(), m = t->spec.codim();
    out(q_out, exponential_at_radius(t->spec, in(x, k), in(u, m), r));
  });
}

srt_status srt_tube_radial_jacobian(const srt_tube* t, const double* x, const double* u,
                                    double rho, double* j) {
  return guard([&] {
    need(t, "tube");
    need(j, "out");
    const int k = t->spec.patch().param_dim(), m = t->spec.codim();
    *j = radial_jacobian(t->spec, in(x, k), in(u, m), rho);
  });
}

srt_status srt_tube_invert(const srt_tube* t, const double* q, double* x_out, double* p_out) {
  return guard([&] {
    need(t, "tube");
    const InverseResult r = invert_exponential(t->spec, in(q, t->spec.dim()), t->spec.ode);
    if (r.x.size()) out(x_out, r.x);
    out(p_out, r.p);
  });
}

srt_status srt_tube_distance(const srt_tube* t, const double* q, double* d) {
  return guard([&] {
    need(t, "tube");
    need(d, "out");
    *d = distance_from_patch(t->spec, in(q, t->spec.dim()), t->spec.ode);
  });
}

srt_status srt_tube_injectivity(const srt_tube* t, double r_max, double* radius, int* certified) {
  return guard([&] {
    need(t, "tube");
    need(radius, "out");
    const InjectivityEstimate e = injectivity_radius_estimate(t->spec, r_max);
    *radius = e.radius;
    if (certified) *certified = e.certified ? 1 : 0;
  });
}

srt_status srt_tube_weyl(const srt_tube* t, int k_max, double r0, double* c_out,
                         double* err_out) {
  return guard([&] {
    need(t, "tube");
    need(c_out, "out");
    const WeylExpansion w = weyl_coefficients(t->spec, k_max, r0);
    for (size_t i = 0; i < w.c.size(); ++i) {
      c_out[i] = w.c[i];
      if (err_out) err_out[i] = w.error[i];
    }
  });
}

srt_status srt_tube_steiner(const srt_tube* t, int k_max, double r0, int side, double* c_out,
                            double* err_out) {
  return guard([&] {
    need(t, "tube");
    need(c_out, "out");
    const WeylExpansion w = steiner_coefficients(t->spec, k_max, r0, side);
    for (size_t i = 0; i < w.c.size(); ++i) {
      c_out[i] = w.c[i];
      if (err_out) err_out[i] = w.error[i];
    }
  });
}

srt_status srt_heisenberg_point_jacobian(int d, const double* p_x, double p_z, double* j) {
  return guard([&] {
    need(j, "out");
    if (d < 1) throw InvalidInput("d must be positive");
    *j = heisenberg_point_jacobian(d, in(p_x, 2 * d), p_z);
  });
}

srt_status srt_scene_load(const char* path, srt_scene** o) {
  return guard([&] {
    need(path, "path");
    need(o, "out");
    *o = new srt_scene{Scene(Config::load(path))};
  });
}

srt_status srt_scene_parse(const char* text, srt_scene** o) {
  return guard([&] {
    need(text, "text");
    need(o, "out");
    *o = new srt_scene{Scene(Config::parse(text))};
  });
}

void srt_scene_free(srt_scene* s) { delete s; }

srt_status srt_scene_output(const srt_scene* s, char** path) {
  return guard([&] {
    need(s, "scene");
    need(path, "out");
    *path = dup(s->scene.output());
  });
}

srt_status srt_scene_run(const srt_scene* s, const char* subcommand, const srt_run_options* opt,
                         char** csv, char** summary) {
  bool passed = true;
  const srt_status st = guard([&] {
    need(s, "scene");
    need(subcommand, "subcommand");
    need(csv, "out");
    RunOptions o;
    if (opt) {
      if (opt->has_seed) o.seed = opt->seed;
      o.threads = opt->threads;
      o.quad_scale = opt->quad_scale;
    }
    const RunResult r = s->scene.run(subcommand, o);
    *csv = dup(r.csv);
    if (summary) *summary = dup(r.summary);
    passed = r.passed;
  });
  if (st == SRT_OK && !passed) {
    last_error = "a configured check failed";
    return SRT_ERR_INVARIANT;
  }
  return st;
}

}  // extern "C"
