#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "clab/fields.hpp"
#include "clab/trigpoly.hpp"

namespace clab {

using MatrixEvaluator = std::function<Mat(const TorusPoint&)>;

// A matrix-valued generator bound to a base system. Closed-form data
// (MatrixField / trig polynomial) rides along when it exists so that exact
// frequency-domain algorithms and serialization stay available; evaluator-only
// cocycles are first-class for everything sample-based.
struct Cocycle {
  std::shared_ptr<const HyperbolicAutomorphism> base;
  int dimension = 0;
  MatrixEvaluator generator;
  MatrixEvaluator generator_inverse;
  std::optional<MatrixField> field_form;
  std::optional<TrigPolyMat> poly_form;
};

Cocycle make_cocycle(std::shared_ptr<const HyperbolicAutomorphism> base,
                     MatrixField field);
Cocycle make_cocycle(std::shared_ptr<const HyperbolicAutomorphism> base,
                     TrigPolyMat poly);
Cocycle make_cocycle(std::shared_ptr<const HyperbolicAutomorphism> base,
                     int dimension, MatrixEvaluator generator,
                     MatrixEvaluator generator_inverse = nullptr);

// A_x^n: forward products for n > 0, inverse products of the pulled-back
// trajectory for n < 0, identity at n = 0. Overflow past 1e300 is an error.
Mat iterate(const Cocycle& coc, const TorusPoint& x, long long n);

// Same product but returned as (normalized matrix, log scale) so norms of
// long products can be compared without overflow: A_x^n = e^{log_scale} · M.
struct ScaledMatrix {
  Mat matrix;
  double log_scale = 0.0;
  double log_norm() const;      // ln of the spectral norm of the true product
  double log_inv_norm() const;  // ln ‖(true product)^{-1}‖
};
ScaledMatrix iterate_scaled(const Cocycle& coc, const TorusPoint& x, long long n);

// The cocycle generated over f^{-1} whose n-step products are A_x^{-n}.
Cocycle inverse_cocycle(const Cocycle& coc);

// B(x) = C(fx) · A(x) · C(x)^{-1}; exact polynomial form is propagated when
// both A and C have one.
Cocycle conjugated_cocycle(const Cocycle& coc, const TrigPolyMat& C);
Cocycle conjugated_cocycle(const Cocycle& coc, MatrixEvaluator C,
                           MatrixEvaluator C_inverse = nullptr);

enum class Verdict { pass, fail, inconclusive };
const char* to_string(Verdict v);

enum class GrowthKind { fiber_bunching, dominated, bounded, quasiconformal };
const char* to_string(GrowthKind k);

struct GrowthReport {
  GrowthKind kind = GrowthKind::fiber_bunching;
  double beta = 1.0;
  double theta_hat = 0.0;  // estimated geometric rate (effective rate for sup kinds)
  double K_hat = 0.0;      // estimated constant / sup statistic
  int n_max = 0;
  int sample_count = 0;
  Verdict verdict = Verdict::inconclusive;
};

// Certifies growth hypotheses by sampling. Geometric kinds measure the
// n_max-th root of the tested product in both time directions; sup kinds
// track a running sup and demand stabilization over the last half-range.
GrowthReport growth_report(const Cocycle& coc, GrowthKind kind, double beta,
                           int n_max, int samples, uint64_t seed,
                           double margin = 0.02);

GrowthReport quasiconformal_distortion(const Cocycle& coc, int n_max,
                                       int samples, uint64_t seed);

// Full spectrum by QR re-orthogonalization along the orbit, descending.
std::vector<double> lyapunov_spectrum(const Cocycle& coc, const TorusPoint& x,
                                      long long n_steps, int qr_period = 1);

// Growth degree of the rescaled cocycle (psi·A): slope of log‖(ψA)^n‖ against
// log n over the upper dyadic range, maximized over a fixed probe grid.
// psi must be a positive scalar (1×1) field.
std::pair<double, double> polynomial_growth_degree(const Cocycle& coc,
                                                   const MatrixField& psi,
                                                   int n_max);

struct ExponentMatchReport {
  std::vector<double> rates_a;  // filtration growth rates from frame Id
  std::vector<double> rates_b;  // from frame C(x), same column filtration
  double max_discrepancy = 0.0;
};

// Compares trajectory-wise growth rates of a frame of directions under A
// against the C(x)-image frame under B. Rates are extracted from the QR
// filtration, which measures the same limits as per-vector iteration but
// stays well-posed for the decaying directions.
ExponentMatchReport exponent_match_check(const Cocycle& A, const Cocycle& B,
                                         const MatrixEvaluator& C,
                                         const TorusPoint& x, long long n_steps);

double spectral_norm(const Mat& m);

}  // namespace clab
