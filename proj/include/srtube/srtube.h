#ifndef SRTUBE_SRTUBE_H
#define SRTUBE_SRTUBE_H

/* C interface of the sub-Riemannian tube engine. All functions return an
 * srt_status; on failure srt_last_error() describes the problem for the
 * calling thread. Objects are opaque and owned by the caller. */

#include <stddef.h>

#if defined(_WIN32)
#define SRT_API __declspec(dllexport)
#else
#define SRT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  SRT_OK = 0,
  SRT_ERR_INVALID = 1,   /* bad argument */
  SRT_ERR_CONFIG = 2,    /* scene configuration error */
  SRT_ERR_NUMERICAL = 3, /* integration, Newton or quadrature failure */
  SRT_ERR_INVARIANT = 4, /* a configured check or invariant suite failed */
  SRT_ERR_INTERNAL = 5
} srt_status;

typedef struct srt_structure srt_structure;
typedef struct srt_patch srt_patch;
typedef struct srt_tube srt_tube;
typedef struct srt_scene srt_scene;

typedef struct {
  int adaptive; /* 1: error-controlled steps, 0: fixed_steps uniform steps */
  double rel_tol;
  double abs_tol;
  int max_steps;
  int fixed_steps;
} srt_ode;

typedef struct {
  int nodes_x;
  int nodes_sphere;
  int nodes_radial;
  int threads; /* 0: hardware concurrency; results do not depend on it */
} srt_quadrature;

typedef struct {
  int has_seed;
  unsigned long long seed;
  int threads;
  double quad_scale;
} srt_run_options;

SRT_API const char* srt_version(void);
SRT_API const char* srt_last_error(void);
SRT_API void srt_string_free(char* s);

SRT_API void srt_ode_defaults(srt_ode* o);
SRT_API void srt_quadrature_defaults(srt_quadrature* q);
SRT_API void srt_run_options_defaults(srt_run_options* o);

/* Structures. Custom frames: fields(user, q, X) writes the n x count matrix
 * X_1(q) .. X_count(q) column-major. The callback may run on several threads
 * at once. */
typedef void (*srt_fields_fn)(void* user, const double* q, double* X);

SRT_API srt_status srt_structure_euclidean(int n, srt_structure** out);
SRT_API srt_status srt_structure_heisenberg(int d, srt_structure** out);
SRT_API srt_status srt_structure_custom(int n, int count, srt_fields_fn fields, void* user,
                                        srt_structure** out);
SRT_API void srt_structure_free(srt_structure* s);
SRT_API srt_status srt_structure_dim(const srt_structure* s, int* n);
SRT_API srt_status srt_hamiltonian(const srt_structure* s, const double* q, const double* p,
                                   double* h);
/* Time-t Hamiltonian flow; ode may be NULL. */
SRT_API srt_status srt_flow(const srt_structure* s, const double* q, const double* p, double t,
                            const srt_ode* ode, double* q_out, double* p_out);

/* Patches. embed(user, x, q) maps k parameters into R^n. */
typedef void (*srt_embed_fn)(void* user, const double* x, double* q);

SRT_API srt_status srt_patch_circle(double R, srt_patch** out);
SRT_API srt_status srt_patch_sphere(double R, srt_patch** out);
SRT_API srt_status srt_patch_segment(int n, double L, srt_patch** out);
/* family: "line", "helix" or "z-axis" in H_{2d+1}. */
SRT_API srt_status srt_patch_curve(int d, const char* family, double theta, double L, double rho,
                                   srt_patch** out);
SRT_API srt_status srt_patch_custom(int n, int k, const double* lo, const double* hi,
                                    srt_embed_fn embed, void* user, srt_patch** out);
SRT_API void srt_patch_free(srt_patch* p);

/* Tubes. ode and quad may be NULL for defaults. */
SRT_API srt_status srt_tube_create(const srt_structure* s, const srt_patch* p, const srt_ode* ode,
                                   const srt_quadrature* quad, srt_tube** out);
SRT_API void srt_tube_free(srt_tube* t);
SRT_API srt_status srt_tube_codim(const srt_tube* t, int* m);
SRT_API srt_status srt_tube_volume(const srt_tube* t, double r, double* v);
SRT_API srt_status srt_tube_half_volume(const srt_tube* t, double r, int side, double* v);
/* E_r(x, u) for a unit u in R^m. */
SRT_API srt_status srt_tube_exponential(const srt_tube* t, const double* x, const double* u,
                                        double r, double* q_out);
SRT_API srt_status srt_tube_radial_jacobian(const srt_tube* t, const double* x, const double* u,
                                            double rho, double* j);
/* Inverse of the normal exponential; p_out has m entries. */
SRT_API srt_status srt_tube_invert(const srt_tube* t, const double* q, double* x_out,
                                   double* p_out);
SRT_API srt_status srt_tube_distance(const srt_tube* t, const double* q, double* d);
SRT_API srt_status srt_tube_injectivity(const srt_tube* t, double r_max, double* radius,
                                        int* certified);
/* c_out receives k_max - m + 1 coefficients (k = m..k_max); err_out may be NULL. */
SRT_API srt_status srt_tube_weyl(const srt_tube* t, int k_max, double r0, double* c_out,
                                 double* err_out);
/* c_out receives k_max coefficients (k = 1..k_max). */
SRT_API srt_status srt_tube_steiner(const srt_tube* t, int k_max, double r0, int side,
                                    double* c_out, double* err_out);

SRT_API srt_status srt_heisenberg_point_jacobian(int d, const double* p_x, double p_z, double* j);

/* Scenes. srt_scene_run fills *csv (and *summary when non-NULL) with strings
 * released by srt_string_free, also when it returns SRT_ERR_INVARIANT. */
SRT_API srt_status srt_scene_load(const char* path, srt_scene** out);
SRT_API srt_status srt_scene_parse(const char* text, srt_scene** out);
SRT_API void srt_scene_free(srt_scene* s);
SRT_API srt_status srt_scene_output(const srt_scene* s, char** path);
SRT_API srt_status srt_scene_run(const srt_scene* s, const char* subcommand,
                                 const srt_run_options* opt, char** csv, char** summary);

#ifdef __cplusplus
}
#endif

#endif
