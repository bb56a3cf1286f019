#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clab/holonomy.hpp"

namespace clab {

// Nested invariant subspaces {0} = V^0 < V^1 < ... < V^k = R^d, each given
// by a matrix with orthonormal columns spanning V^i.
struct Flag {
  std::vector<int> dimensions;  // d_1 < ... < d_k = d
  std::vector<Mat> subspaces;   // d x d_i, orthonormal, nested spans

  int depth() const { return static_cast<int>(dimensions.size()); }
  int dim() const { return dimensions.empty() ? 0 : dimensions.back(); }
};

// {0} < R^d: every cocycle preserves it.
Flag trivial_flag(int d);
// Spans of leading coordinate vectors, one per prefix size.
Flag coordinate_flag(const std::vector<int>& dims, int d);
// Nesting, orthonormality, and dimension consistency; throws otherwise.
void validate_flag(const Flag& flag);

// For a constant matrix whose eigenvalues all share one modulus rho:
// the filtration V^i = ker q(A)^i by generalized-eigenvector order, on which
// rho^{-1} A acts block-triangularly with isometric-up-to-conjugacy diagonal
// actions. Errors with multiple_moduli when the moduli differ.
std::pair<Flag, double> jordan_flag(const Mat& A);

// A cocycle cut along a flag: complements U^i of V^{i-1} in V^i, orthonormal
// for the supplied inner product, with the generator's blocks
// A^{j,i}(x) = coordinates of P^j A(x)|_{U^i}. Exact coefficient forms of the
// blocks ride along when the cocycle has a closed form.
struct BlockDecomposition {
  Flag flag;
  Mat metric;                    // inner product the complements are orthonormal in
  std::vector<Mat> complements;  // U^i, d x (d_i - d_{i-1})
  std::vector<Mat> projections;  // P^i = U_i U_i^T G; sum = Id
  MatrixEvaluator generator;
  std::map<std::pair<int, int>, TrigPolyMat> poly_blocks;
  double triangularity_residual = 0.0;

  int depth() const { return flag.depth(); }
  int block_dim(int i) const {
    return static_cast<int>(complements[i].cols());
  }
  // Coordinates of P^j A(x) restricted to U^i (size u_j x u_i).
  Mat block(int j, int i, const TorusPoint& x) const;
  // Lift block coordinates back to a d x d contribution; summing embed over
  // all (j,i) reproduces the generator.
  Mat embed(const Mat& coords, int j, int i) const;
};

// Throws not_invariant (with the offending point and level in the message)
// when the flag is not preserved by the generator. An empty metric means the
// Euclidean inner product.
BlockDecomposition block_decompose(const Cocycle& coc, const Flag& flag,
                                   const Mat& metric = Mat());

// A Riemannian metric on one fiber, plus the measured defect of invariance
// under the generator (affine-invariant distance between the pullback of the
// metric at fx and the metric at x).
struct SpdPoint {
  Mat matrix;
  double invariance_residual = 0.0;
};

// Affine-invariant distance between positive definite matrices.
double spd_distance(const Mat& p, const Mat& q);

// Approximate circumcenter of the orbit {(A^n_x)^T A^n_x : |n| <= n_range}
// in the positive definite cone: subgradient descent on the max-distance,
// then a pullback fixed-point polish accepted only when it does not enlarge
// the circumradius. Errors not_bounded when the orbit leaves norm 1e6.
SpdPoint invariant_metric(const Cocycle& coc, const TorusPoint& x, int n_range,
                          int iterations);

// A conjugacy known either in exact coefficient form or only pointwise.
struct ConjugacySection {
  MatrixEvaluator eval;
  MatrixEvaluator eval_inverse;            // may be empty: inverted on demand
  std::optional<TrigPolyMat> closed_form;  // when the route is exact
  double solve_residual = 0.0;
  std::string route;  // "supplied" | "spectral" | "forward-series" | "assembled"
};

ConjugacySection section_from_poly(TrigPolyMat c);
ConjugacySection section_from_evaluator(MatrixEvaluator c, int d);

// Solves the off-diagonal blocks of B_x = C(fx) A_x C(x)^{-1} given the
// diagonal conjugacies, one super-diagonal at a time: each block satisfies a
// twisted coboundary equation whose twist is eta -> (B^{jj})^{-1} eta A^{ii}.
// Blocks with geometrically decaying twists use the forward orbit series;
// bounded twists with exact coefficient data are solved in frequency space.
// diagonal[j] evaluates the u_j x u_j block conjugating the j-th quotient of
// A to the j-th quotient of B (in complement coordinates).
ConjugacySection inductive_block_solve(
    const Cocycle& a_coc, const Cocycle& b_coc, const Flag& flag_a,
    const Flag& flag_b, const std::vector<ConjugacySection>& diagonal,
    double tol = 1e-10);

// max over samples of ||B_x - C(fx) A_x C(x)^{-1}|| / ||B_x||. Errors
// singular_conjugacy when cond C(x) exceeds 1e12 at a sample.
PropertyRow conjugacy_residual(const Cocycle& a_coc, const Cocycle& b_coc,
                               const ConjugacySection& c, int samples,
                               uint64_t seed);

// max over sampled leaf pairs, both leaf kinds, of
// ||H^B_{x,y} - C(y) H^A_{x,y} C(x)^{-1}||.
PropertyRow intertwining_residual(const Cocycle& a_coc, const Cocycle& b_coc,
                                  const ConjugacySection& c, int samples,
                                  double tol, uint64_t seed);

struct HolderEstimate {
  double beta_hat = 0.0;
  double r_squared = 0.0;
  int used_scales = 0;
};

// Regression of log max-over-samples ||section(x) - section(x + t v_leaf)||
// against log t over the supplied scales. Errors insufficient_signal when
// every difference sits below the 1e-13 noise floor.
HolderEstimate holder_exponent_estimate(const MatrixEvaluator& section,
                                        const HyperbolicAutomorphism& sys,
                                        const LeafSelector& leaf, int x_samples,
                                        const std::vector<double>& scales,
                                        uint64_t seed);

// Splitting of a small perturbation of a constant matrix with separated
// eigenvalue-modulus groups, recovered per sample point by forward/backward
// singular filtrations and their intersections.
struct SplittingReport {
  std::vector<double> moduli;           // group moduli of the reference matrix
  std::vector<int> multiplicities;      // group sizes, summing to d
  double max_invariance_residual = 0.0; // angle(B_x E^i_x, E^i_{fx})
  double max_axis_distance = 0.0;       // angle to the reference subspaces
  std::vector<double> block_exponents;  // growth rate along each E^i
  int samples = 0;
  Verdict verdict = Verdict::inconclusive;
};

// reference: the unperturbed constant matrix; its modulus groups define the
// expected splitting. Errors gap_too_small when the singular values of the
// n_power-step products do not separate the groups by a factor of 2.
SplittingReport invariant_splitting(const Cocycle& b_coc, const Mat& reference,
                                    int n_power, int samples, uint64_t seed);

// The per-point frames behind invariant_splitting: one orthonormal basis per
// modulus group of the reference, ascending, estimated at x from the same
// filtration intersections. Lets callers restrict the cocycle to a recovered
// subbundle (the frame gauge is per-point; restricted products telescope
// through the projections up to the splitting's invariance defect).
std::vector<Mat> splitting_frames(const Cocycle& b_coc, const Mat& reference,
                                  int n_power, const TorusPoint& x);

}  // namespace clab
