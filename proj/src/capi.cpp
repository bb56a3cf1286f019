#include "cocyclelab.h"

#include <cstring>
#include <memory>
#include <string>

#include "clab/cocycle.hpp"
#include "clab/errors.hpp"
#include "clab/holonomy.hpp"
#include "clab/scenario.hpp"

namespace {

using namespace clab;

// The header's status values must track ErrorCode exactly; a reorder on
// either side is a compile error here.
#define CLAB_CHECK_CODE(c_name, cpp_name)                            \
  static_assert(static_cast<int>(c_name) ==                          \
                    static_cast<int>(ErrorCode::cpp_name),           \
                #c_name " out of sync with ErrorCode::" #cpp_name)
CLAB_CHECK_CODE(CLAB_OK, ok);
CLAB_CHECK_CODE(CLAB_ERR_NOT_UNIMODULAR, not_unimodular);
CLAB_CHECK_CODE(CLAB_ERR_NOT_HYPERBOLIC, not_hyperbolic);
CLAB_CHECK_CODE(CLAB_ERR_LEAF_RADIUS_EXCEEDED, leaf_radius_exceeded);
CLAB_CHECK_CODE(CLAB_ERR_LEAF_MISMATCH, leaf_mismatch);
CLAB_CHECK_CODE(CLAB_ERR_OVERFLOW, overflow);
CLAB_CHECK_CODE(CLAB_ERR_NO_CONVERGENCE, no_convergence);
CLAB_CHECK_CODE(CLAB_ERR_DEGENERATE, degenerate);
CLAB_CHECK_CODE(CLAB_ERR_NOT_INVARIANT, not_invariant);
CLAB_CHECK_CODE(CLAB_ERR_MULTIPLE_MODULI, multiple_moduli);
CLAB_CHECK_CODE(CLAB_ERR_GAP_TOO_SMALL, gap_too_small);
CLAB_CHECK_CODE(CLAB_ERR_NOT_BOUNDED, not_bounded);
CLAB_CHECK_CODE(CLAB_ERR_TWIST_NOT_BOUNDED, twist_not_bounded);
CLAB_CHECK_CODE(CLAB_ERR_SINGULAR_CONJUGACY, singular_conjugacy);
CLAB_CHECK_CODE(CLAB_ERR_INSUFFICIENT_SIGNAL, insufficient_signal);
CLAB_CHECK_CODE(CLAB_ERR_CONFIG, config_error);
CLAB_CHECK_CODE(CLAB_ERR_INVALID_ARGUMENT, invalid_argument);
CLAB_CHECK_CODE(CLAB_ERR_IO, io_error);
CLAB_CHECK_CODE(CLAB_ERR_INTERNAL, internal);
#undef CLAB_CHECK_CODE

thread_local clab_status tl_code = CLAB_OK;
thread_local std::string tl_message;

clab_status set_error(clab_status code, const std::string& msg) {
  tl_code = code;
  tl_message = msg;
  return code;
}

// Runs fn, translating every exception into a status code.
template <typename Fn>
clab_status guarded(Fn&& fn) {
  try {
    fn();
    return CLAB_OK;
  } catch (const LabError& e) {
    return set_error(static_cast<clab_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(CLAB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(CLAB_ERR_INTERNAL, "unknown exception");
  }
}

clab_status require_c(bool ok, const char* what) {
  return ok ? CLAB_OK : set_error(CLAB_ERR_INVALID_ARGUMENT, what);
}

TorusPoint point_from(const double* x, int m) {
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = x[i];
  return TorusPoint{v};
}

void matrix_out(const Mat& m, double* out) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
}

}  // namespace

struct clab_system {
  std::shared_ptr<const clab::HyperbolicAutomorphism> sys;
};

struct clab_cocycle {
  clab::Cocycle coc;
};

extern "C" {

const char* clab_version(void) { return "0.1.0"; }

clab_status clab_last_error_code(void) { return tl_code; }

const char* clab_last_error_message(void) { return tl_message.c_str(); }

clab_status clab_system_create(const long long* entries, int m,
                               double leaf_radius, clab_system** out_sys) {
  if (auto s = require_c(entries && out_sys && m >= 2,
                         "clab_system_create: bad arguments"))
    return s;
  return guarded([&] {
    const double radius = leaf_radius > 0 ? leaf_radius : 0.4;
    auto handle = std::make_unique<clab_system>();
    handle->sys = std::make_shared<const HyperbolicAutomorphism>(
        make_automorphism(m, entries, radius));
    *out_sys = handle.release();
  });
}

void clab_system_destroy(clab_system* sys) { delete sys; }

int clab_system_dim(const clab_system* sys) {
  return sys ? sys->sys->dim() : 0;
}

double clab_system_nu(const clab_system* sys) {
  return sys ? sys->sys->nu() : 0.0;
}

double clab_system_nu_hat(const clab_system* sys) {
  return sys ? sys->sys->nu_hat() : 0.0;
}

clab_status clab_system_step(const clab_system* sys, const double* x,
                             long long n, double* out_y) {
  if (auto s =
          require_c(sys && x && out_y, "clab_system_step: bad arguments"))
    return s;
  return guarded([&] {
    const TorusPoint y = step(*sys->sys, point_from(x, sys->sys->dim()), n);
    for (int i = 0; i < sys->sys->dim(); ++i) out_y[i] = y.coords[i];
  });
}

clab_status clab_cocycle_create(const clab_system* sys, const char* field_json,
                                clab_cocycle** out_coc) {
  if (auto s = require_c(sys && field_json && out_coc,
                         "clab_cocycle_create: bad arguments"))
    return s;
  return guarded([&] {
    auto handle = std::make_unique<clab_cocycle>();
    handle->coc = make_cocycle(sys->sys, field_from_json(field_json));
    *out_coc = handle.release();
  });
}

void clab_cocycle_destroy(clab_cocycle* coc) { delete coc; }

int clab_cocycle_dimension(const clab_cocycle* coc) {
  return coc ? coc->coc.dimension : 0;
}

clab_status clab_cocycle_evaluate(const clab_cocycle* coc, const double* x,
                                  double* out) {
  if (auto s =
          require_c(coc && x && out, "clab_cocycle_evaluate: bad arguments"))
    return s;
  return guarded([&] {
    matrix_out(coc->coc.generator(point_from(x, coc->coc.base->dim())), out);
  });
}

clab_status clab_cocycle_iterate(const clab_cocycle* coc, const double* x,
                                 long long n, double* out) {
  if (auto s =
          require_c(coc && x && out, "clab_cocycle_iterate: bad arguments"))
    return s;
  return guarded([&] {
    matrix_out(iterate(coc->coc, point_from(x, coc->coc.base->dim()), n), out);
  });
}

clab_status clab_lyapunov_spectrum(const clab_cocycle* coc, const double* x,
                                   int n_steps, double* out_exponents) {
  if (auto s = require_c(coc && x && out_exponents && n_steps > 0,
                         "clab_lyapunov_spectrum: bad arguments"))
    return s;
  return guarded([&] {
    const std::vector<double> spec = lyapunov_spectrum(
        coc->coc, point_from(x, coc->coc.base->dim()), n_steps);
    for (size_t i = 0; i < spec.size(); ++i) out_exponents[i] = spec[i];
  });
}

namespace {

clab_status holonomy_impl(const clab_cocycle* coc, const double* x,
                          const double* y, double tol, int n_max, double* out,
                          bool stable) {
  if (auto s = require_c(coc && x && y && out && tol > 0 && n_max > 0,
                         "clab holonomy: bad arguments"))
    return s;
  return guarded([&] {
    const int m = coc->coc.base->dim();
    const HolonomyMap h =
        stable ? stable_holonomy(coc->coc, point_from(x, m), point_from(y, m),
                                 tol, n_max)
               : unstable_holonomy(coc->coc, point_from(x, m),
                                   point_from(y, m), tol, n_max);
    matrix_out(h.matrix, out);
  });
}

}  // namespace

clab_status clab_stable_holonomy(const clab_cocycle* coc, const double* x,
                                 const double* y, double tol, int n_max,
                                 double* out) {
  return holonomy_impl(coc, x, y, tol, n_max, out, true);
}

clab_status clab_unstable_holonomy(const clab_cocycle* coc, const double* x,
                                   const double* y, double tol, int n_max,
                                   double* out) {
  return holonomy_impl(coc, x, y, tol, n_max, out, false);
}

int clab_scenario_count(void) {
  return static_cast<int>(scenario_names().size());
}

const char* clab_scenario_name(int index) {
  const auto& names = scenario_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<size_t>(index)].c_str();
}

clab_status clab_run_scenario(const char* name, const char* config_json,
                              const char* out_dir, const uint64_t* seed,
                              int serial, int* out_exit_code,
                              char* failing_check, size_t failing_cap) {
  if (auto s = require_c(name && out_exit_code,
                         "clab_run_scenario: bad arguments"))
    return s;
  return guarded([&] {
    ScenarioConfig cfg = config_json ? parse_scenario_config(config_json)
                                     : default_scenario_config();
    if (out_dir) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    const ScenarioResult res = run_scenario(name, cfg, serial != 0);
    *out_exit_code = res.exit_code;
    if (failing_check && failing_cap > 0) {
      const size_t n = std::min(failing_cap - 1, res.failing_check.size());
      std::memcpy(failing_check, res.failing_check.data(), n);
      failing_check[n] = '\0';
    }
  });
}

}  // extern "C"
