/* C interface to the cocycle laboratory.
 *
 * Everything lives behind two opaque handle types; matrices cross the
 * boundary as row-major double buffers sized d*d, torus points as double
 * buffers sized m. Calls return CLAB_OK or a status code; the message for
 * the most recent failure on the calling thread is kept alive until that
 * thread's next failing call.
 */
#ifndef COCYCLELAB_H
#define COCYCLELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CLAB_API __declspec(dllexport)
#elif defined(__GNUC__)
#define CLAB_API __attribute__((visibility("default")))
#else
#define CLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes, in one-to-one correspondence with the library's internal
 * error conditions (same order, same values). */
typedef enum clab_status {
  CLAB_OK = 0,
  CLAB_ERR_NOT_UNIMODULAR = 1,
  CLAB_ERR_NOT_HYPERBOLIC = 2,
  CLAB_ERR_LEAF_RADIUS_EXCEEDED = 3,
  CLAB_ERR_LEAF_MISMATCH = 4,
  CLAB_ERR_OVERFLOW = 5,
  CLAB_ERR_NO_CONVERGENCE = 6,
  CLAB_ERR_DEGENERATE = 7,
  CLAB_ERR_NOT_INVARIANT = 8,
  CLAB_ERR_MULTIPLE_MODULI = 9,
  CLAB_ERR_GAP_TOO_SMALL = 10,
  CLAB_ERR_NOT_BOUNDED = 11,
  CLAB_ERR_TWIST_NOT_BOUNDED = 12,
  CLAB_ERR_SINGULAR_CONJUGACY = 13,
  CLAB_ERR_INSUFFICIENT_SIGNAL = 14,
  CLAB_ERR_CONFIG = 15,
  CLAB_ERR_INVALID_ARGUMENT = 16,
  CLAB_ERR_IO = 17,
  CLAB_ERR_INTERNAL = 18
} clab_status;

typedef struct clab_system clab_system;   /* hyperbolic toral automorphism */
typedef struct clab_cocycle clab_cocycle; /* matrix field bound to a system */

/* Library version as "major.minor.patch". */
CLAB_API const char* clab_version(void);

/* Status and message of the calling thread's most recent failure. The
 * message pointer stays valid until the next failing call on this thread. */
CLAB_API clab_status clab_last_error_code(void);
CLAB_API const char* clab_last_error_message(void);

/* --- base system --------------------------------------------------------- */

/* entries: m*m integers, row-major. leaf_radius <= 0 selects the default. */
CLAB_API clab_status clab_system_create(const long long* entries, int m,
                                        double leaf_radius,
                                        clab_system** out_sys);
CLAB_API void clab_system_destroy(clab_system* sys);
CLAB_API int clab_system_dim(const clab_system* sys);
CLAB_API double clab_system_nu(const clab_system* sys);
CLAB_API double clab_system_nu_hat(const clab_system* sys);
/* out_y = L^n x mod 1; x and out_y hold m doubles and may alias. */
CLAB_API clab_status clab_system_step(const clab_system* sys, const double* x,
                                      long long n, double* out_y);

/* --- cocycles ------------------------------------------------------------ */

/* field_json describes the generator A(x) = C0 * exp(sum of Fourier modes):
 * {"dimension": d, "base_dimension": m, "constant_factor": [d*d numbers],
 *  "terms": [{"k": [m ints], "P": [d*d], "Q": [d*d]}, ...]}.
 * The cocycle keeps its own reference to the system; destroying the system
 * handle before dependent cocycles is allowed. */
CLAB_API clab_status clab_cocycle_create(const clab_system* sys,
                                         const char* field_json,
                                         clab_cocycle** out_coc);
CLAB_API void clab_cocycle_destroy(clab_cocycle* coc);
CLAB_API int clab_cocycle_dimension(const clab_cocycle* coc);
/* out holds d*d doubles, row-major. */
CLAB_API clab_status clab_cocycle_evaluate(const clab_cocycle* coc,
                                           const double* x, double* out);
/* n-step product A^n_x (n may be negative); out holds d*d doubles. */
CLAB_API clab_status clab_cocycle_iterate(const clab_cocycle* coc,
                                          const double* x, long long n,
                                          double* out);
/* Benettin/QR Lyapunov spectrum from x over n_steps; out holds d doubles,
 * descending. */
CLAB_API clab_status clab_lyapunov_spectrum(const clab_cocycle* coc,
                                            const double* x, int n_steps,
                                            double* out_exponents);
/* Holonomy along the stable (resp. unstable) leaf through x; y must lie on
 * that leaf within the configured radius. out holds d*d doubles. */
CLAB_API clab_status clab_stable_holonomy(const clab_cocycle* coc,
                                          const double* x, const double* y,
                                          double tol, int n_max, double* out);
CLAB_API clab_status clab_unstable_holonomy(const clab_cocycle* coc,
                                            const double* x, const double* y,
                                            double tol, int n_max, double* out);

/* --- scenario runner ------------------------------------------------------ */

CLAB_API int clab_scenario_count(void);
/* Names in listing order; NULL when index is out of range. */
CLAB_API const char* clab_scenario_name(int index);

/* Runs one named scenario. config_json = NULL means the built-in defaults.
 * out_dir / seed, when non-NULL, override the config. serial != 0 requests
 * the byte-exact reference evaluation order. On CLAB_OK, *out_exit_code is
 * 0 when every check passed, 1 otherwise, and failing_check (when non-NULL,
 * capacity failing_cap) receives the first failing check's name, empty on
 * pass. Config and usage problems return a status instead. */
CLAB_API clab_status clab_run_scenario(const char* name,
                                       const char* config_json,
                                       const char* out_dir,
                                       const uint64_t* seed, int serial,
                                       int* out_exit_code, char* failing_check,
                                       size_t failing_cap);

#ifdef __cplusplus
}
#endif

#endif /* COCYCLELAB_H */
