#include "clab/holonomy.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "clab/rng.hpp"

namespace clab {

namespace {

// Bunching is monitored at the default Hölder class.
constexpr double kBeta = 1.0;
// Accepted geometric tail: with ratio <= 0.95 the remainder after an
// increment of size r is at most 19 r, so acceptance demands 19 r < tol.
constexpr double kDecayRatio = 0.95;
constexpr double kTailFactor = kDecayRatio / (1.0 - kDecayRatio);

// Smallest representative of v modulo Z^m, coordinatewise in [-1/2, 1/2).
Vec wrap_pm(Vec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] -= std::round(v[i]);
  return v;
}

// Verifies y lies on the local leaf of x of the requested kind and within
// the leaf radius.
void check_leaf(const HyperbolicAutomorphism& sys, const TorusPoint& x,
                const TorusPoint& y, LeafSelector::Kind kind) {
  const Mat& basis = kind == LeafSelector::stable ? sys.stable_basis()
                                                  : sys.unstable_basis();
  const Vec diff = wrap_pm(y.coords - x.coords);
  const Vec in_leaf = basis.transpose() * diff;
  require((diff - basis * in_leaf).norm() <= 1e-9, ErrorCode::leaf_mismatch,
          "target point is not on the local leaf of the source");
  require(in_leaf.norm() <= sys.leaf_radius() + 1e-12,
          ErrorCode::leaf_mismatch, "target point is outside the local leaf");
}

// A pair of orbit points on a common local leaf, advanced in lockstep. The
// offset of the second point from the first is stored in leaf-subspace
// coordinates and advanced by the exact restriction of the base matrix to
// that subspace. Stepping the two points independently would let per-step
// rounding feed the expanding directions, which separates the pair after
// about log(1/eps)/log(nu_hat) steps; confining the offset to the
// contracting subspace removes that failure mode entirely.
class LeafPair {
 public:
  LeafPair(const HyperbolicAutomorphism& sys, const TorusPoint& x,
           const TorusPoint& y, LeafSelector::Kind kind, int dir)
      : sys_(sys),
        basis_(kind == LeafSelector::stable ? sys.stable_basis()
                                            : sys.unstable_basis()),
        dir_(dir),
        px_(x) {
    const Mat step_mat =
        (dir > 0 ? sys.matrix() : sys.matrix_inverse()).cast<double>();
    restrict_ = basis_.transpose() * step_mat * basis_;
    c_ = basis_.transpose() * wrap_pm(y.coords - x.coords);
  }

  const TorusPoint& x() const { return px_; }
  TorusPoint y() const {
    return TorusPoint(wrap_mod1(px_.coords + basis_ * c_));
  }
  double offset_norm() const { return c_.norm(); }

  void advance() {
    px_ = step(sys_, px_, dir_);
    c_ = restrict_ * c_;
  }

 private:
  const HyperbolicAutomorphism& sys_;
  Mat basis_;
  Mat restrict_;  // one step of the dynamics in leaf coordinates
  int dir_;
  TorusPoint px_;
  Vec c_;
};

double cond2(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

// Keeps the two accumulated factors at comparable norms; the represented
// product U * (...) * V is unchanged by the opposite scalings.
void rebalance(Mat& U, Mat& V) {
  const double nu = U.norm(), nv = V.norm();
  if (nu <= 0.0 || nv <= 0.0) return;
  const double g = std::sqrt(nu / nv);
  if (g > 2.0 || g < 0.5) {
    U /= g;
    V *= g;
  }
}

// Shared accumulation loop for both leaf kinds. H_n is the conjugated
// partial product (A^n_y)^{-1} A^n_x written as Id plus a telescoping sum of
// increments U_k [A(y_k)^{-1} A(x_k) - Id] V_k; each increment is of the
// order of the distance between the orbit points, which contracts along the
// chosen leaf, so the sum is Cauchy exactly when the accumulated
// non-conformality U_k, V_k does not eat the contraction -- the fiber
// bunching condition, which is monitored opportunistically below.
HolonomyMap holonomy_limit(const Cocycle& coc, const TorusPoint& x,
                           const TorusPoint& y, double tol, int n_max,
                           LeafSelector::Kind kind) {
  require(coc.base != nullptr, ErrorCode::invalid_argument, "null base");
  require(tol > 0.0 && n_max >= 4, ErrorCode::invalid_argument,
          "tolerance must be positive and n_max >= 4");
  const auto& sys = *coc.base;
  check_leaf(sys, x, y, kind);

  const int d = coc.dimension;
  HolonomyMap out;
  out.source = x;
  out.target = y;
  out.leaf = LeafSelector{kind, 0};
  out.matrix = Mat::Identity(d, d);
  if (x.same_coords(y)) return out;  // transport over a trivial pair is Id

  // Per-step contraction rate of leaf distances in the chosen direction.
  const double log_contract =
      kind == LeafSelector::stable ? std::log(sys.nu()) : -std::log(sys.nu_hat());

  Mat U = Mat::Identity(d, d);  // (A^n_y)^{-1}, resp. (A^{-n}_y)^{-1}
  Mat V = Mat::Identity(d, d);  // A^n_x, resp. A^{-n}_x
  Mat H = Mat::Identity(d, d);
  const int dir = kind == LeafSelector::stable ? 1 : -1;
  LeafPair pair(sys, x, y, kind, dir);
  double prev_inc = -1.0;
  int decay_run = 0;

  for (int n = 0; n < n_max; ++n) {
    Mat delta(d, d);
    if (kind == LeafSelector::stable) {
      const Mat gy_inv = coc.generator_inverse(pair.y());
      const Mat gx = coc.generator(pair.x());
      delta.noalias() = gy_inv * gx;
      delta -= Mat::Identity(d, d);
      const Mat inc = U * delta * V;
      H += inc;
      out.residual = inc.norm();
      U = U * gy_inv;
      V = gx * V;
      pair.advance();
    } else {
      pair.advance();
      const Mat gy = coc.generator(pair.y());
      const Mat gx_inv = coc.generator_inverse(pair.x());
      delta.noalias() = gy * gx_inv;
      delta -= Mat::Identity(d, d);
      const Mat inc = U * delta * V;
      H += inc;
      out.residual = inc.norm();
      U = U * gy;
      V = gx_inv * V;
    }
    out.n_used = n + 1;
    rebalance(U, V);

    const double fnorm = U.norm() * V.norm();
    require(std::isfinite(fnorm) && fnorm < 1e200, ErrorCode::no_convergence,
            "conjugating products overflowed; cocycle is not fiber bunched "
            "on this orbit");

    // three consecutive contracting ratios before trusting a geometric
    // tail; increments at the rounding floor of the accumulated sum count
    // as contracted (they never shrink by a fixed ratio again)
    const double noise = 1e-14 * (1.0 + H.norm());
    if (out.residual <= noise ||
        (prev_inc > 0.0 && out.residual < kDecayRatio * prev_inc)) {
      ++decay_run;
    } else {
      decay_run = 0;
    }
    if (out.residual > noise) prev_inc = out.residual;

    const double log_q =
        std::log(cond2(V)) + (n + 1) * kBeta * log_contract;
    if (decay_run >= 3 &&
        (out.residual * kTailFactor < tol || out.residual <= noise)) {
      // accept only with a healthy bunching statistic at the stop time
      if (log_q <= (n + 1) * std::log(1.02)) {
        require(cond2(H) < 1e12, ErrorCode::no_convergence,
                "holonomy limit is numerically singular");
        out.matrix = H;
        return out;
      }
    }
    if (n + 1 >= 16 && (n + 1) % 8 == 0) {
      require(log_q <= (n + 1) * std::log(1.02), ErrorCode::no_convergence,
              "fiber-bunching statistic diverges along the orbit");
    }
  }
  throw LabError(ErrorCode::no_convergence,
                 "holonomy increments did not reach tolerance within n_max");
}

// Least-squares slope of log(r) against log(d), ignoring pairs below the
// noise floor. Returns the number of usable pairs through `used`.
double loglog_slope(const std::vector<double>& dist,
                    const std::vector<double>& res, int* used) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < dist.size(); ++i) {
    if (res[i] < 1e-13 || dist[i] <= 0.0) continue;
    const double lx = std::log(dist[i]), ly = std::log(res[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (used) *used = n;
  const double den = n * sxx - sx * sx;
  if (n < 3 || std::fabs(den) < 1e-12) return 0.0;
  return (n * sxy - sx * sy) / den;
}

}  // namespace

HolonomyMap stable_holonomy(const Cocycle& coc, const TorusPoint& x,
                            const TorusPoint& y, double tol, int n_max) {
  return holonomy_limit(coc, x, y, tol, n_max, LeafSelector::stable);
}

HolonomyMap unstable_holonomy(const Cocycle& coc, const TorusPoint& x,
                              const TorusPoint& y, double tol, int n_max) {
  return holonomy_limit(coc, x, y, tol, n_max, LeafSelector::unstable);
}

Mat holonomy_partial_product(const Cocycle& coc, const TorusPoint& x,
                             const TorusPoint& y, const LeafSelector& leaf,
                             int n) {
  require(coc.base != nullptr, ErrorCode::invalid_argument, "null base");
  require(n >= 0, ErrorCode::invalid_argument, "n must be nonnegative");
  const auto& sys = *coc.base;
  check_leaf(sys, x, y, leaf.kind);

  // Direct route: multiply the generators along both orbits and conjugate
  // once at the end. No telescoping, so it cross-checks the series route.
  const int d = coc.dimension;
  Mat px_prod = Mat::Identity(d, d);   // A^n_x, resp. A^{-n}_x
  Mat py_inv = Mat::Identity(d, d);    // (A^n_y)^{-1}, resp. (A^{-n}_y)^{-1}
  const int dir = leaf.kind == LeafSelector::stable ? 1 : -1;
  LeafPair pair(sys, x, y, leaf.kind, dir);
  for (int k = 0; k < n; ++k) {
    if (leaf.kind == LeafSelector::stable) {
      px_prod = coc.generator(pair.x()) * px_prod;
      py_inv = py_inv * coc.generator_inverse(pair.y());
      pair.advance();
    } else {
      pair.advance();
      px_prod = coc.generator_inverse(pair.x()) * px_prod;
      py_inv = py_inv * coc.generator(pair.y());
    }
    require(px_prod.norm() * py_inv.norm() < 1e200, ErrorCode::overflow,
            "conjugated partial product overflowed");
  }
  return py_inv * px_prod;
}

std::vector<PropertyRow> holonomy_property_suite(const Cocycle& coc,
                                                 int samples, double tol,
                                                 uint64_t seed) {
  require(samples >= 1, ErrorCode::invalid_argument, "samples >= 1");
  const auto& sys = *coc.base;
  const int m = sys.dim();
  const double radius = sys.leaf_radius();
  SampleStream rng(seed);

  double max_h2 = 0.0, max_h3 = 0.0, max_uni = 0.0;
  std::vector<double> dists, norms;

  for (int i = 0; i < samples; ++i) {
    Vec c(m);
    for (int j = 0; j < m; ++j) c[j] = rng.uniform(i, j);
    TorusPoint x{c};
    // dyadic spread of offsets gives the Hölder fit several decades
    const double scale = std::pow(2.0, -(i % 5));
    const double t1 = -0.35 * radius * scale * (0.5 + 0.5 * rng.uniform(i, 10));
    const double t2 = 0.35 * radius * scale * (0.5 + 0.5 * rng.uniform(i, 11));
    const LeafSelector leaf{LeafSelector::stable, 0};
    TorusPoint y = leaf_point(sys, x, leaf, t1);
    TorusPoint z = leaf_point(sys, x, leaf, t2);

    const HolonomyMap hxy = stable_holonomy(coc, x, y, tol);
    const HolonomyMap hxz = stable_holonomy(coc, x, z, tol);
    const HolonomyMap hyz = stable_holonomy(coc, y, z, tol);

    // composition law
    max_h2 = std::max(max_h2,
                      (hyz.matrix * hxy.matrix - hxz.matrix).norm());

    // equivariance under n steps of the dynamics
    for (int n = 1; n <= 5; ++n) {
      const Mat an_x = iterate(coc, x, n);
      const Mat an_y = iterate(coc, y, n);
      const HolonomyMap hn =
          stable_holonomy(coc, step(sys, x, n), step(sys, y, n), tol);
      const Mat rhs = an_y.partialPivLu().solve(hn.matrix * an_x);
      max_h3 = std::max(max_h3, (hxy.matrix - rhs).norm());
    }

    // Hölder data for ||H - Id||
    dists.push_back(torus_distance(x, y));
    norms.push_back(
        (hxy.matrix - Mat::Identity(coc.dimension, coc.dimension)).norm());

    // stopping-schedule independence
    const HolonomyMap tight = stable_holonomy(coc, x, y, tol / 100.0);
    max_uni = std::max(max_uni, (hxy.matrix - tight.matrix).norm());
  }

  int used = 0;
  const double slope = loglog_slope(dists, norms, &used);

  std::vector<PropertyRow> rows;
  rows.push_back({"H2-composition", samples, max_h2, 0.0, 2000,
                  max_h2 < 10 * tol ? Verdict::pass : Verdict::fail});
  rows.push_back({"H3-equivariance", samples, max_h3, 0.0, 5,
                  max_h3 < 10 * tol ? Verdict::pass : Verdict::fail});
  Verdict hv = Verdict::inconclusive;  // too few usable pairs: fit skipped
  if (used >= 3) hv = slope >= kBeta - 0.1 ? Verdict::pass : Verdict::fail;
  rows.push_back({"H4-holder", used, 0.0, slope, 2000, hv});
  rows.push_back({"H-uniqueness", samples, max_uni, 0.0, 2000,
                  max_uni < 10 * tol ? Verdict::pass : Verdict::fail});
  return rows;
}

Vec trajectory_sum(const Cocycle& twist, const VectorField& phi,
                   const TorusPoint& x, long long n) {
  require(n >= 0, ErrorCode::invalid_argument, "n must be nonnegative");
  require(phi.dimension == twist.dimension, ErrorCode::invalid_argument,
          "phi dimension must match the twist");
  const int d = twist.dimension;
  Vec out = Vec::Zero(d);
  Mat minv = Mat::Identity(d, d);
  TorusPoint p = x;
  for (long long k = 0; k < n; ++k) {
    out.noalias() += minv * evaluate(phi, p);
    minv = minv * twist.generator_inverse(p);
    require(minv.cwiseAbs().maxCoeff() < 1e300, ErrorCode::overflow,
            "twisted trajectory sum overflowed");
    p = step(*twist.base, p, 1);
  }
  return out;
}

Vec twisted_difference(const Cocycle& twist, const VectorField& phi,
                       const TorusPoint& x, const TorusPoint& y, double tol,
                       int n_max) {
  require(phi.dimension == twist.dimension, ErrorCode::invalid_argument,
          "phi dimension must match the twist");
  const auto& sys = *twist.base;
  check_leaf(sys, x, y, LeafSelector::stable);
  const int d = twist.dimension;
  if (x.same_coords(y)) return Vec::Zero(d);

  // One transport from y to x; the per-step transports at later orbit times
  // are equivalent to it through the equivariance law, which is what turns
  // the series into a single pair of twisted orbit sums. The transport is
  // resolved two decades below the requested tolerance because its error
  // enters every increment and would floor the series early.
  const Mat h_yx = stable_holonomy(twist, y, x, tol / 100.0, n_max).matrix;

  Vec sum = Vec::Zero(d);
  Mat minv_x = Mat::Identity(d, d), minv_y = Mat::Identity(d, d);
  LeafPair pair(sys, x, y, LeafSelector::stable, 1);
  double prev_inc = -1.0;
  int decay_run = 0;
  double block_max = 0.0;
  double prev_block = std::numeric_limits<double>::infinity();
  int block_decay = 0;
  for (int k = 0; k < n_max; ++k) {
    const Vec inc = minv_x * evaluate(phi, pair.x()) -
                    h_yx * (minv_y * evaluate(phi, pair.y()));
    sum += inc;
    const double r = inc.norm();
    const double noise = 1e-14 * (1.0 + sum.norm());
    if (r <= noise || (prev_inc > 0.0 && r < kDecayRatio * prev_inc)) {
      ++decay_run;
    } else {
      decay_run = 0;
    }
    if (r > noise) prev_inc = r;
    if (decay_run >= 3 && (r * kTailFactor < tol || r <= noise)) return sum;
    block_max = std::max(block_max, r);
    if ((k + 1) % 8 == 0) {
      // same envelope acceptance as the coboundary solve: increments may
      // wobble inside a decaying envelope when phi oscillates along the orbit
      block_decay = block_max <= 0.6 * prev_block ? block_decay + 1 : 0;
      if (block_decay >= 2 && 24.0 * block_max < tol) return sum;
      prev_block = block_max;
      block_max = 0.0;
    }

    minv_x = minv_x * twist.generator_inverse(pair.x());
    minv_y = minv_y * twist.generator_inverse(pair.y());
    require(minv_x.norm() + minv_y.norm() < 1e150, ErrorCode::no_convergence,
            "twisted increments overflowed");
    pair.advance();
  }
  throw LabError(ErrorCode::no_convergence,
                 "twisted difference series did not reach tolerance");
}

TwistedHolonomy twisted_holonomy(const Cocycle& twist, const VectorField& phi,
                                 const TorusPoint& x, const TorusPoint& y,
                                 double tol, int n_max) {
  TwistedHolonomy th;
  th.linear = stable_holonomy(twist, x, y, tol, n_max);
  th.offset = twisted_difference(twist, phi, y, x, tol, n_max);
  return th;
}

Vec twisted_holonomy_apply(const Cocycle& twist, const VectorField& phi,
                           const TorusPoint& x, const TorusPoint& y,
                           const Vec& v, double tol, int n_max) {
  const TwistedHolonomy th = twisted_holonomy(twist, phi, x, y, tol, n_max);
  return th.linear.matrix * v + th.offset;
}

Vec solve_twisted_coboundary(const Cocycle& twist, const VectorField& phi,
                             const TorusPoint& x, double tol, int n_max) {
  require(phi.dimension == twist.dimension, ErrorCode::invalid_argument,
          "phi dimension must match the twist");
  return solve_twisted_coboundary(
      twist, [&phi](const TorusPoint& p) { return evaluate(phi, p); }, x, tol,
      n_max);
}

Vec solve_twisted_coboundary(const Cocycle& twist, const VectorEvaluator& phi,
                             const TorusPoint& x, double tol, int n_max) {
  require(phi != nullptr, ErrorCode::invalid_argument, "null phi evaluator");
  const int d = twist.dimension;
  Vec sum = Vec::Zero(d);
  Mat minv = Mat::Identity(d, d);
  TorusPoint p = x;
  double prev_inc = -1.0;
  int decay_run = 0;
  // 8-step increment envelopes: block maxima smooth out oscillations of phi
  // along the orbit (and of the inverse products within a period of a
  // periodic point) that individual increments show
  double block_max = 0.0;
  double prev_block = std::numeric_limits<double>::infinity();
  double min_block = std::numeric_limits<double>::infinity();
  int block_decay = 0;
  for (int k = 0; k < n_max; ++k) {
    const Vec inc = minv * phi(p);
    sum += inc;
    const double r = inc.norm();
    const double noise = 1e-14 * (1.0 + sum.norm());
    if (r <= noise || (prev_inc > 0.0 && r < kDecayRatio * prev_inc)) {
      ++decay_run;
    } else {
      decay_run = 0;
    }
    if (r > noise) prev_inc = r;
    if (decay_run >= 3 && (r * kTailFactor < tol || r <= noise)) return sum;
    block_max = std::max(block_max, r);
    if ((k + 1) % 8 == 0) {
      // a convergent series cannot climb far above its own envelope
      // minimum; sustained growth is divergence, not slow convergence
      require(!(block_max > tol && block_max > 50.0 * min_block),
              ErrorCode::no_convergence,
              "twisted orbit sums grow: no continuous solution along this "
              "orbit");
      // envelope acceptance: two consecutive halvings of the block maximum
      // bound the remainder by a geometric sum of blocks even when the
      // increments wobble inside each block
      block_decay = block_max <= 0.6 * prev_block ? block_decay + 1 : 0;
      if (block_decay >= 2 && 24.0 * block_max < tol) return sum;
      prev_block = block_max;
      min_block = std::min(min_block, block_max);
      block_max = 0.0;
    }
    minv = minv * twist.generator_inverse(p);
    require(minv.norm() < 1e150, ErrorCode::no_convergence,
            "inverse iterates of the twist are unbounded");
    p = step(*twist.base, p, 1);
  }
  throw LabError(ErrorCode::no_convergence,
                 "twisted orbit sum did not reach tolerance within n_max");
}

std::vector<PropertyRow> twisted_invariance_residual(
    const Cocycle& twist, const VectorField& phi,
    const VectorEvaluator& eta_solver, int samples, double tol,
    uint64_t seed) {
  require(samples >= 1, ErrorCode::invalid_argument, "samples >= 1");
  require(eta_solver != nullptr, ErrorCode::invalid_argument, "null solver");
  const auto& sys = *twist.base;
  const int m = sys.dim();
  SampleStream rng(seed);

  double max_res = 0.0;
  std::vector<double> dists, diffs;
  for (int i = 0; i < samples; ++i) {
    Vec c(m);
    for (int j = 0; j < m; ++j) c[j] = rng.uniform(i, j);
    TorusPoint x{c};
    const double sign = rng.uniform(i, 20) < 0.5 ? -1.0 : 1.0;
    const double t =
        sign * 0.85 * sys.leaf_radius() * std::pow(2.0, -(i % 6));
    TorusPoint y = leaf_point(sys, x, LeafSelector{LeafSelector::stable, 0}, t);

    const Vec ex = eta_solver(x);
    const Vec ey = eta_solver(y);
    const Vec transported = twisted_holonomy_apply(twist, phi, x, y, ex, tol);
    max_res = std::max(max_res, (ey - transported).norm());
    dists.push_back(torus_distance(x, y));
    diffs.push_back((ex - ey).norm());
  }

  int used = 0;
  const double slope = loglog_slope(dists, diffs, &used);

  std::vector<PropertyRow> rows;
  rows.push_back({"twisted-invariance", samples, max_res, 0.0, 2000,
                  max_res < 10 * tol ? Verdict::pass : Verdict::fail});
  Verdict hv = Verdict::inconclusive;
  if (used >= 3) hv = slope >= kBeta - 0.1 ? Verdict::pass : Verdict::fail;
  rows.push_back({"twisted-holder", used, 0.0, slope, 2000, hv});
  return rows;
}

}  // namespace clab
