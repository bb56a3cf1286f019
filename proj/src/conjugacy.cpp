#include "clab/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "clab/errors.hpp"
#include "clab/rng.hpp"

namespace clab {

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vec vec_of(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat unvec(const Vec& v, int rows, int cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Modified Gram-Schmidt in the G-inner product; near-null columns dropped.
Mat g_orthonormalize(const Mat& w, const Mat& g, double drop_tol) {
  std::vector<Vec> cols;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    Vec v = w.col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& u : cols) v -= u * u.dot(g * v);
    const double nrm = std::sqrt(v.dot(g * v));
    if (nrm > drop_tol) cols.push_back(v / nrm);
  }
  Mat out(w.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) out.col(i) = cols[i];
  return out;
}

TorusPoint sample_point(const SampleStream& rng, uint64_t index, int dim) {
  Vec c(dim);
  for (int j = 0; j < dim; ++j) c[j] = rng.uniform(index, j);
  return TorusPoint{c};
}

// Largest principal angle between the spans of two orthonormal frames of
// equal column count.
double principal_angle(const Mat& q1, const Mat& q2) {
  Eigen::JacobiSVD<Mat> svd(q1.transpose() * q2);
  const double smin = svd.singularValues().minCoeff();
  return std::acos(std::clamp(smin, -1.0, 1.0));
}

Mat orthonormal_columns(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

}  // namespace

// ---------------------------------------------------------------------------
// Flags

Flag trivial_flag(int d) {
  require(d >= 1, ErrorCode::invalid_argument, "flag dimension must be >= 1");
  Flag f;
  f.dimensions = {d};
  f.subspaces = {Mat::Identity(d, d)};
  return f;
}

Flag coordinate_flag(const std::vector<int>& dims, int d) {
  Flag f;
  f.dimensions = dims;
  for (int di : dims) {
    require(di >= 1 && di <= d, ErrorCode::invalid_argument,
            "coordinate flag: dimension out of range");
    f.subspaces.push_back(Mat::Identity(d, d).leftCols(di));
  }
  validate_flag(f);
  return f;
}

void validate_flag(const Flag& flag) {
  require(!flag.dimensions.empty(), ErrorCode::invalid_argument,
          "flag: no levels");
  require(flag.dimensions.size() == flag.subspaces.size(),
          ErrorCode::invalid_argument, "flag: levels and subspaces mismatch");
  const int d = flag.dim();
  int prev = 0;
  for (int i = 0; i < flag.depth(); ++i) {
    const int di = flag.dimensions[i];
    require(di > prev, ErrorCode::invalid_argument,
            "flag: dimensions must strictly increase");
    const Mat& b = flag.subspaces[i];
    require(b.rows() == d && b.cols() == di, ErrorCode::invalid_argument,
            "flag: subspace shape mismatch");
    require((b.transpose() * b - Mat::Identity(di, di)).norm() < 1e-9,
            ErrorCode::invalid_argument, "flag: subspace basis not orthonormal");
    if (i > 0) {
      const Mat& p = flag.subspaces[i - 1];
      require((p - b * (b.transpose() * p)).norm() < 1e-8,
              ErrorCode::invalid_argument, "flag: subspaces not nested");
    }
    prev = di;
  }
  require(flag.dimensions.back() == d, ErrorCode::invalid_argument,
          "flag: final level must be the whole space");
}

// ---------------------------------------------------------------------------
// jordan_flag

std::pair<Flag, double> jordan_flag(const Mat& a) {
  const int d = static_cast<int>(a.rows());
  require(d >= 1 && a.cols() == d, ErrorCode::invalid_argument,
          "jordan_flag: square matrix required");
  Eigen::EigenSolver<Mat> es(a);
  require(es.info() == Eigen::Success, ErrorCode::degenerate,
          "jordan_flag: eigenvalue iteration failed");
  const Eigen::VectorXcd ev = es.eigenvalues();
  double max_mod = 0.0, min_mod = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const double m = std::abs(ev[i]);
    max_mod = std::max(max_mod, m);
    min_mod = std::min(min_mod, m);
  }
  const double scale = std::max(1.0, max_mod);
  if (max_mod - min_mod > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "jordan_flag: eigenvalue moduli differ (" << min_mod << " vs "
        << max_mod << "); no single growth modulus";
    throw LabError(ErrorCode::multiple_moduli, msg.str());
  }
  const double rho = 0.5 * (max_mod + min_mod);

  // Cluster nearby eigenvalues so a defective eigenvalue (whose computed
  // copies scatter by roughly eps^(1/m)) contributes one root to q.
  std::vector<std::complex<double>> reps;
  std::vector<int> counts;
  const double radius = 1e-4 * scale;
  for (int i = 0; i < d; ++i) {
    bool merged = false;
    for (size_t r = 0; r < reps.size(); ++r) {
      if (std::abs(ev[i] - reps[r]) < radius) {
        reps[r] = (reps[r] * static_cast<double>(counts[r]) + ev[i]) /
                  static_cast<double>(counts[r] + 1);
        ++counts[r];
        merged = true;
        break;
      }
    }
    if (!merged) {
      reps.push_back(ev[i]);
      counts.push_back(1);
    }
  }

  CMat q = CMat::Identity(d, d);
  const CMat ac = a.cast<std::complex<double>>();
  for (const auto& r : reps) q = q * (ac - r * CMat::Identity(d, d));
  require(q.imag().norm() <= 1e-8 * (1.0 + q.real().norm()),
          ErrorCode::degenerate,
          "jordan_flag: root clustering broke conjugate symmetry");
  const Mat qr = q.real();

  Flag flag;
  Mat p = qr;
  int prev_null = 0;
  const double env = std::max(1.0, a.norm());
  for (int i = 1; i <= d; ++i) {
    Eigen::JacobiSVD<Mat> svd(p, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double thr = std::max(1e-7 * smax, 1e-9 * std::pow(env, i));
    int nullity = 0;
    for (int s = 0; s < d; ++s)
      if (sv(s) <= thr) ++nullity;
    require(nullity > prev_null, ErrorCode::degenerate,
            "jordan_flag: nilpotent filtration stalled before filling the "
            "space");
    flag.dimensions.push_back(nullity);
    flag.subspaces.push_back(svd.matrixV().rightCols(nullity));
    prev_null = nullity;
    if (nullity == d) break;
    p = p * qr;
  }
  validate_flag(flag);
  return {flag, rho};
}

// ---------------------------------------------------------------------------
// block_decompose

Mat BlockDecomposition::block(int j, int i, const TorusPoint& x) const {
  return complements[j].transpose() * metric * generator(x) * complements[i];
}

Mat BlockDecomposition::embed(const Mat& coords, int j, int i) const {
  return complements[j] * coords * complements[i].transpose() * metric;
}

BlockDecomposition block_decompose(const Cocycle& coc, const Flag& flag,
                                   const Mat& metric) {
  validate_flag(flag);
  const int d = coc.dimension;
  require(flag.dim() == d, ErrorCode::invalid_argument,
          "block_decompose: flag dimension does not match the fiber");
  Mat g = metric.size() ? metric : Mat(Mat::Identity(d, d));
  require(g.rows() == d && g.cols() == d &&
              (g - g.transpose()).norm() <= 1e-10 * (1.0 + g.norm()),
          ErrorCode::invalid_argument, "block_decompose: metric not symmetric");
  {
    Eigen::LLT<Mat> llt(sym(g));
    require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
            "block_decompose: metric not positive definite");
  }

  BlockDecomposition out;
  out.flag = flag;
  out.metric = g;
  out.generator = coc.generator;

  Mat prior(d, 0);
  int prev_dim = 0;
  for (int i = 0; i < flag.depth(); ++i) {
    const Mat& b = flag.subspaces[i];
    Mat w = b;
    if (prior.cols() > 0) w -= prior * (prior.transpose() * g * b);
    Mat u = g_orthonormalize(w, g, 1e-10);
    require(static_cast<int>(u.cols()) == flag.dimensions[i] - prev_dim,
            ErrorCode::degenerate,
            "block_decompose: complement rank deficient");
    out.complements.push_back(u);
    Mat grown(d, prior.cols() + u.cols());
    grown << prior, u;
    prior = grown;
    prev_dim = flag.dimensions[i];
  }
  for (int i = 0; i < flag.depth(); ++i)
    out.projections.push_back(out.complements[i] *
                              out.complements[i].transpose() * g);

  // Probe the flag's invariance under the generator at fixed points; the
  // lower block coordinates are exactly the defect.
  const int bd = coc.base->dim();
  SampleStream rng(0x0b10cdecULL);
  double tri = 0.0;
  for (int t = 0; t < 16; ++t) {
    const TorusPoint x = sample_point(rng, t, bd);
    const Mat ax = coc.generator(x);
    const double ref = 1.0 + ax.norm();
    for (int i = 0; i < flag.depth(); ++i) {
      for (int j = i + 1; j < flag.depth(); ++j) {
        const double res = out.block(j, i, x).norm();
        if (res > 1e-8 * ref) {
          std::ostringstream msg;
          msg << "block_decompose: generator does not preserve flag level "
              << (i + 1) << " (defect " << res << " at x = ["
              << x.coords.transpose() << "])";
          throw LabError(ErrorCode::not_invariant, msg.str());
        }
        tri = std::max(tri, res);
      }
    }
  }
  out.triangularity_residual = tri;

  if (coc.poly_form) {
    for (int j = 0; j < flag.depth(); ++j) {
      for (int i = j; i < flag.depth(); ++i) {
        TrigPolyMat pj =
            TrigPolyMat::constant(out.complements[j].transpose() * g, bd) *
            (*coc.poly_form) * TrigPolyMat::constant(out.complements[i], bd);
        out.poly_blocks.emplace(std::make_pair(j, i), pj.pruned());
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SPD geometry

namespace {

Mat spd_log(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(p));
  require(es.info() == Eigen::Success, ErrorCode::degenerate,
          "symmetric eigensolve failed");
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    require(ev[i] > 0.0, ErrorCode::degenerate,
            "matrix log of a non-positive matrix");
    ev[i] = std::log(ev[i]);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat spd_exp(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(p));
  require(es.info() == Eigen::Success, ErrorCode::degenerate,
          "symmetric eigensolve failed");
  Vec ev = es.eigenvalues().array().exp();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat spd_power(const Mat& p, double e) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(p));
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    require(ev[i] > 0.0, ErrorCode::degenerate,
            "matrix power of a non-positive matrix");
    ev[i] = std::pow(ev[i], e);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Geodesic from p toward q in the affine-invariant geometry, fraction s.
Mat spd_geodesic(const Mat& p, const Mat& q, double s) {
  const Mat ph = spd_power(p, 0.5);
  const Mat pih = spd_power(p, -0.5);
  return sym(ph * spd_power(sym(pih * q * pih), s) * ph);
}

}  // namespace

double spd_distance(const Mat& p, const Mat& q) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(sym(q), sym(p));
  require(ges.info() == Eigen::Success, ErrorCode::degenerate,
          "generalized eigensolve failed");
  double s = 0.0;
  for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i) {
    const double lam = ges.eigenvalues()[i];
    require(lam > 0.0, ErrorCode::degenerate,
            "affine distance of non-positive matrices");
    const double l = std::log(lam);
    s += l * l;
  }
  return std::sqrt(s);
}

namespace {

Mat metric_core(const Cocycle& coc, const TorusPoint& x, int n_range,
                int iterations) {
  const int d = coc.dimension;
  std::vector<Mat> orbit;
  orbit.reserve(2 * n_range + 1);
  for (int n = -n_range; n <= n_range; ++n) {
    const Mat m = iterate(coc, x, n);
    const Mat gn = sym(m.transpose() * m);
    require(gn.norm() <= 1e6, ErrorCode::not_bounded,
            "invariant_metric: iterates leave the bounded cone; no invariant "
            "metric for an unbounded cocycle");
    orbit.push_back(gn);
  }

  Mat l = Mat::Zero(d, d);
  for (const Mat& gn : orbit) l += spd_log(gn);
  l /= static_cast<double>(orbit.size());
  Mat cur = spd_exp(l);

  auto max_dist = [&orbit](const Mat& c, int* arg) {
    double dm = -1.0;
    int best = 0;
    for (size_t i = 0; i < orbit.size(); ++i) {
      const double dd = spd_distance(c, orbit[i]);
      if (dd > dm) {
        dm = dd;
        best = static_cast<int>(i);
      }
    }
    if (arg) *arg = best;
    return dm;
  };

  // Subgradient steps toward the farthest orbit point shrink the
  // circumradius; the 1/(k+1) schedule guarantees progress stalls only at
  // the center.
  for (int k = 0; k < iterations; ++k) {
    int arg = 0;
    const double dm = max_dist(cur, &arg);
    if (dm < 1e-13) break;
    const double step_len = std::min(1.0 / (k + 1.0), 0.5 * dm);
    if (step_len < 1e-8) break;
    cur = spd_geodesic(cur, orbit[arg], step_len / dm);
  }

  // The circumradius as a function of a scalar rescaling e^s M is a maximum
  // of convex functions of s; balancing it directly removes the conformal
  // component of the descent error, which the pullback polish below cannot
  // touch (geodesic midpoints preserve determinants).
  auto balance_scale = [&](Mat m) {
    double lo = -0.7, hi = 0.7;
    for (int it = 0; it < 60; ++it) {
      const double s1 = lo + (hi - lo) / 3.0, s2 = hi - (hi - lo) / 3.0;
      if (max_dist(std::exp(s1) * m, nullptr) <
          max_dist(std::exp(s2) * m, nullptr))
        hi = s2;
      else
        lo = s1;
    }
    return Mat(std::exp(0.5 * (lo + hi)) * m);
  };

  // Pullback fixed-point polish: the center of a generator-invariant orbit
  // is itself fixed, so averaging with the pullback removes the residual
  // descent error. Kept only while the circumradius does not grow.
  const Mat a = coc.generator(x);
  cur = balance_scale(cur);
  double best = max_dist(cur, nullptr);
  for (int t = 0; t < 256; ++t) {
    const Mat pulled = sym(a.transpose() * cur * a);
    Mat cand = spd_geodesic(cur, pulled, 0.5);
    if (t % 16 == 15) cand = balance_scale(cand);
    const double md = max_dist(cand, nullptr);
    if (md > best + 1e-9) break;
    const double moved = spd_distance(cur, cand);
    cur = cand;
    best = std::min(best, md);
    if (moved < 1e-14) break;
  }
  return balance_scale(cur);
}

}  // namespace

SpdPoint invariant_metric(const Cocycle& coc, const TorusPoint& x, int n_range,
                          int iterations) {
  require(n_range >= 1, ErrorCode::invalid_argument,
          "invariant_metric: n_range >= 1");
  require(iterations >= 1, ErrorCode::invalid_argument,
          "invariant_metric: iterations >= 1");
  SpdPoint out;
  out.matrix = metric_core(coc, x, n_range, iterations);
  const TorusPoint fx = step(*coc.base, x, 1);
  const Mat at_fx = metric_core(coc, fx, n_range, iterations);
  const Mat a = coc.generator(x);
  out.invariance_residual =
      spd_distance(sym(a.transpose() * at_fx * a), out.matrix);
  return out;
}

// ---------------------------------------------------------------------------
// Conjugacy sections

ConjugacySection section_from_poly(TrigPolyMat c) {
  require(c.rows() == c.cols(), ErrorCode::invalid_argument,
          "conjugacy section must be square");
  auto sp = std::make_shared<TrigPolyMat>(std::move(c));
  ConjugacySection s;
  s.eval = [sp](const TorusPoint& x) -> Mat { return sp->evaluate(x); };
  s.eval_inverse = [sp](const TorusPoint& x) -> Mat {
    return sp->evaluate(x).partialPivLu().inverse();
  };
  s.closed_form = *sp;
  s.route = "supplied";
  return s;
}

ConjugacySection section_from_evaluator(MatrixEvaluator c, int d) {
  require(c != nullptr && d >= 1, ErrorCode::invalid_argument,
          "section_from_evaluator: null evaluator");
  ConjugacySection s;
  s.eval = c;
  s.eval_inverse = [c](const TorusPoint& x) -> Mat {
    return c(x).partialPivLu().inverse();
  };
  s.route = "supplied";
  return s;
}

// ---------------------------------------------------------------------------
// Frequency-space twisted solve (bounded twists with exact coefficients)

namespace {

using Key = TrigPolyMat::Key;

Key apply_int(const IMat& m, const Key& k) {
  const int n = static_cast<int>(k.size());
  Key out(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += m(i, j) * k[j];
  return out;
}

double key_norm(const Key& k) {
  double s = 0.0;
  for (long long v : k) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

// Solves eta(x) - WL eta(fx) WR = phi(x) on Fourier coefficients. Wave
// vectors fall into orbits of the transpose-inverse action of the base map;
// on each orbit the equation is a one-sided recursion seeded with zero above
// the highest mode of phi, and a solution exists exactly when the recursion
// residue below the lowest mode dies out.
TrigPolyMat spectral_twisted_solve(const Mat& wl, const Mat& wr,
                                   const TrigPolyMat& phi,
                                   const HyperbolicAutomorphism& sys,
                                   double* coeff_residual) {
  const int rows = phi.rows(), cols = phi.cols(), bd = phi.base_dim();
  const double scale = std::max(phi.max_coefficient_norm(), 1e-30);
  const TrigPolyMat phip = phi.pruned(1e-14 * scale);
  TrigPolyMat eta(rows, cols, bd);
  const Key zero(bd, 0);

  {  // mean mode: a small Sylvester system, solved at minimal norm
    const CMat p0 = phip.coefficient(zero);
    const Mat rhs_m = p0.real();
    require(p0.imag().norm() <= 1e-10 * (1.0 + rhs_m.norm()),
            ErrorCode::internal, "spectral solve: complex mean of a real field");
    const Mat k =
        Mat::Identity(rows * cols, rows * cols) - kron(wr.transpose(), wl);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(k);
    const Vec rhs = vec_of(rhs_m);
    const Vec h0 = cod.solve(rhs);
    require((k * h0 - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()),
            ErrorCode::no_convergence,
            "spectral solve: the mean mode is obstructed; the twisted "
            "equation has no solution");
    if (h0.norm() > 1e-15 * scale)
      eta.add_coefficient(zero,
                          unvec(h0, rows, cols).cast<std::complex<double>>());
  }

  const IMat sig = sys.matrix_inverse().transpose();
  const IMat sig_inv = sys.matrix().transpose();
  const CMat wlc = wl.cast<std::complex<double>>();
  const CMat wrc = wr.cast<std::complex<double>>();

  std::set<Key> support;
  double rmax = 0.0;
  for (const auto& [k, c] : phip.coefficients()) {
    if (k == zero) continue;
    support.insert(k);
    rmax = std::max(rmax, key_norm(k));
  }

  std::set<Key> visited;
  const int guard = 64, cap = 8192;
  for (const Key& q0 : support) {
    if (visited.count(q0)) continue;
    std::vector<Key> fwd, bwd;  // positions +1,+2,... and -1,-2,...
    int top = 0, bottom = 0;
    {
      Key cur = q0;
      int since = 0, j = 0;
      while (true) {
        cur = apply_int(sig, cur);
        ++j;
        ++since;
        fwd.push_back(cur);
        if (support.count(cur)) {
          top = j;
          since = 0;
        }
        if (since > guard && key_norm(cur) > rmax + 1.0) break;
        require(j < cap, ErrorCode::internal,
                "spectral solve: wave-vector walk ran away");
      }
      cur = q0;
      since = 0;
      j = 0;
      while (true) {
        cur = apply_int(sig_inv, cur);
        --j;
        ++since;
        bwd.push_back(cur);
        if (support.count(cur)) {
          bottom = j;
          since = 0;
        }
        if (since > guard && key_norm(cur) > rmax + 1.0) break;
        require(-j < cap, ErrorCode::internal,
                "spectral solve: wave-vector walk ran away");
      }
    }
    auto pos = [&](int j) -> const Key& {
      return j == 0 ? q0 : (j > 0 ? fwd[j - 1] : bwd[-j - 1]);
    };

    CMat h = CMat::Zero(rows, cols);
    for (int j = top; j >= bottom; --j) {
      h = phip.coefficient(pos(j)) + wlc * h * wrc;
      if (h.norm() > 1e-15 * scale) eta.add_coefficient(pos(j), h);
      visited.insert(pos(j));
    }
    {  // residue below the lowest mode must decay to zero
      Key ck = pos(bottom);
      CMat t = wlc * h * wrc;
      const double cutoff = 1e-13 * scale;
      int steps = 0;
      while (t.norm() > cutoff) {
        require(++steps <= 240, ErrorCode::no_convergence,
                "spectral solve: the coefficient recursion does not "
                "terminate; the twisted equation has no convergent solution");
        ck = apply_int(sig_inv, ck);
        eta.add_coefficient(ck, t);
        visited.insert(ck);
        t = wlc * t * wrc;
      }
    }
  }

  // Self-verification on coefficients: the defect of the solved eta in the
  // original equation, bounded by the chain cutoff.
  const TrigPolyMat resid = eta - TrigPolyMat::constant(wl, bd) *
                                      eta.precompose(sys) *
                                      TrigPolyMat::constant(wr, bd) -
                            phip;
  const double rn = resid.pruned(0.0).max_coefficient_norm();
  require(rn <= 1e-9 * (1.0 + scale), ErrorCode::internal,
          "spectral solve: verification residual above the chain cutoff");
  if (coeff_residual) *coeff_residual = rn;
  return eta;
}

}  // namespace

// ---------------------------------------------------------------------------
// inductive_block_solve

namespace {

struct BlockSec {
  std::function<Mat(const TorusPoint&)> eval;
  std::optional<TrigPolyMat> poly;
};

struct SolveState {
  std::shared_ptr<const HyperbolicAutomorphism> sys;
  BlockDecomposition da, db;
  std::map<std::pair<int, int>, BlockSec> c;
};

// Constant value of a coefficient-form block, if it is constant.
std::optional<Mat> constant_block(const BlockDecomposition& dec, int j, int i) {
  auto it = dec.poly_blocks.find({j, i});
  if (it == dec.poly_blocks.end()) return std::nullopt;
  const TrigPolyMat p = it->second.pruned(1e-12 * (1.0 + it->second.max_coefficient_norm()));
  const Key zero(p.base_dim(), 0);
  for (const auto& [k, c] : p.coefficients())
    if (k != zero) return std::nullopt;
  return Mat(p.coefficient(zero).real());
}

}  // namespace

ConjugacySection inductive_block_solve(
    const Cocycle& a_coc, const Cocycle& b_coc, const Flag& flag_a,
    const Flag& flag_b, const std::vector<ConjugacySection>& diagonal,
    double tol) {
  require(a_coc.base && b_coc.base, ErrorCode::invalid_argument,
          "inductive_block_solve: missing base");
  require((a_coc.base->matrix() - b_coc.base->matrix()).cwiseAbs().sum() == 0,
          ErrorCode::invalid_argument,
          "inductive_block_solve: the two cocycles must share one base map");
  require(a_coc.dimension == b_coc.dimension, ErrorCode::invalid_argument,
          "inductive_block_solve: fiber dimensions differ");
  require(tol > 0, ErrorCode::invalid_argument, "tol must be positive");

  auto st = std::make_shared<SolveState>();
  st->sys = a_coc.base;
  st->da = block_decompose(a_coc, flag_a);
  st->db = block_decompose(b_coc, flag_b);
  const int k = st->da.depth();
  require(st->db.depth() == k, ErrorCode::invalid_argument,
          "inductive_block_solve: flag depths differ");
  for (int j = 0; j < k; ++j)
    require(st->da.block_dim(j) == st->db.block_dim(j),
            ErrorCode::invalid_argument,
            "inductive_block_solve: block dimensions differ between flags");
  require(static_cast<int>(diagonal.size()) == k, ErrorCode::invalid_argument,
          "inductive_block_solve: one diagonal conjugacy per level required");

  const auto& sys = *st->sys;
  const int d = a_coc.dimension;
  const int bd = sys.dim();
  SampleStream rng(0xc0471e5ULL);
  std::vector<TorusPoint> probes;
  for (int t = 0; t < 3; ++t) probes.push_back(sample_point(rng, t, bd));

  // The supplied diagonal sections must actually conjugate the quotient
  // actions; everything downstream silently trusts this.
  for (int j = 0; j < k; ++j) {
    require(diagonal[j].eval != nullptr, ErrorCode::invalid_argument,
            "inductive_block_solve: diagonal section has no evaluator");
    for (const TorusPoint& p : probes) {
      const Mat lhs = st->db.block(j, j, p) * diagonal[j].eval(p);
      const Mat rhs = diagonal[j].eval(step(sys, p, 1)) * st->da.block(j, j, p);
      if ((lhs - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
        std::ostringstream msg;
        msg << "inductive_block_solve: diagonal section " << (j + 1)
            << " does not conjugate the quotient actions (defect "
            << (lhs - rhs).norm() << ")";
        throw LabError(ErrorCode::invalid_argument, msg.str());
      }
    }
    st->c[{j, j}] = BlockSec{diagonal[j].eval, diagonal[j].closed_form};
  }

  double worst_res = 0.0;
  std::set<std::string> routes;

  for (int l = 1; l < k; ++l) {
    for (int j = 0; j + l < k; ++j) {
      const int i = j + l;
      const int uj = st->da.block_dim(j);
      const int ui = st->da.block_dim(i);
      SolveState* raw = st.get();

      // phi collects the already-solved strictly-inner terms of the (j,i)
      // block equation, normalized by the left diagonal block.
      auto phi_eval = [raw, j, i, uj, ui](const TorusPoint& x) -> Mat {
        const TorusPoint fx = step(*raw->sys, x, 1);
        Mat acc = Mat::Zero(uj, ui);
        for (int a = j; a < i; ++a)
          acc += raw->c.at({j, a}).eval(fx) * raw->da.block(a, i, x);
        for (int b = j + 1; b <= i; ++b)
          acc -= raw->db.block(j, b, x) * raw->c.at({b, i}).eval(x);
        return raw->db.block(j, j, x).partialPivLu().solve(acc);
      };

      // Boundedness probe of the stage twist via 24-step block products.
      double rate = 0.0;
      for (const TorusPoint& p : probes) {
        Mat pa = Mat::Identity(ui, ui);
        Mat pb = Mat::Identity(uj, uj);
        double la = 0.0, lb = 0.0;
        TorusPoint q = p;
        for (int t = 0; t < 24; ++t) {
          pa = st->da.block(i, i, q) * pa;
          pb = st->db.block(j, j, q) * pb;
          const double na = pa.norm(), nb = pb.norm();
          la += std::log(na);
          pa /= na;
          lb += std::log(nb);
          pb /= nb;
          q = step(sys, q, 1);
        }
        const double log_f = std::log(spectral_norm(pa)) + la;
        Eigen::JacobiSVD<Mat> svd(pb);
        const double log_b = -(std::log(svd.singularValues().minCoeff()) + lb);
        rate = std::max(rate, std::exp((log_f + log_b) / 24.0));
      }

      BlockSec bs;
      if (rate < 0.97) {
        // Contracting twist: the forward orbit series converges and needs no
        // closed form. Flatten eta -> (B^jj)^-1 eta A^ii by vectorization.
        auto gen_inv = [raw, j, i](const TorusPoint& x) -> Mat {
          return kron(raw->da.block(i, i, x).transpose(),
                      raw->db.block(j, j, x).partialPivLu().inverse());
        };
        auto gen = [raw, j, i](const TorusPoint& x) -> Mat {
          return kron(
              raw->da.block(i, i, x).partialPivLu().inverse().transpose(),
              raw->db.block(j, j, x));
        };
        const Cocycle twist = make_cocycle(st->sys, uj * ui, gen, gen_inv);
        auto phi_vec = [phi_eval](const TorusPoint& p) -> Vec {
          return vec_of(phi_eval(p));
        };
        bs.eval = [twist, phi_vec, tol, uj, ui](const TorusPoint& x) -> Mat {
          return unvec(solve_twisted_coboundary(twist, phi_vec, x, tol), uj,
                       ui);
        };
        routes.insert("forward-series");
      } else if (rate <= 1.02) {
        // Bounded, non-contracting twist: only the frequency-space route
        // applies, and it needs constant diagonal blocks plus coefficient
        // forms of everything entering phi.
        const auto aii = constant_block(st->da, i, i);
        const auto bjj = constant_block(st->db, j, j);
        require(aii && bjj, ErrorCode::no_convergence,
                "inductive_block_solve: bounded stage twist with "
                "non-constant diagonal blocks; no convergent route");
        bool have_polys = true;
        for (int a = j; a < i && have_polys; ++a)
          have_polys = st->c.at({j, a}).poly.has_value() &&
                       st->da.poly_blocks.count({a, i}) > 0;
        for (int b = j + 1; b <= i && have_polys; ++b)
          have_polys = st->c.at({b, i}).poly.has_value() &&
                       st->db.poly_blocks.count({j, b}) > 0;
        require(have_polys, ErrorCode::no_convergence,
                "inductive_block_solve: bounded stage twist without exact "
                "coefficient data; no convergent route");
        const Mat wl = bjj->partialPivLu().inverse();
        const Mat wr = *aii;
        TrigPolyMat acc(uj, ui, bd);
        for (int a = j; a < i; ++a)
          acc = acc + st->c.at({j, a}).poly->precompose(sys) *
                          st->da.poly_blocks.at({a, i});
        for (int b = j + 1; b <= i; ++b)
          acc = acc - st->db.poly_blocks.at({j, b}) * *st->c.at({b, i}).poly;
        const TrigPolyMat phi_poly =
            (TrigPolyMat::constant(wl, bd) * acc).pruned();
        double coeff_res = 0.0;
        TrigPolyMat eta =
            spectral_twisted_solve(wl, wr, phi_poly, sys, &coeff_res);
        worst_res = std::max(worst_res, coeff_res);
        auto ep = std::make_shared<TrigPolyMat>(std::move(eta));
        bs.poly = *ep;
        bs.eval = [ep](const TorusPoint& x) -> Mat { return ep->evaluate(x); };
        routes.insert("spectral");
      } else {
        std::ostringstream msg;
        msg << "inductive_block_solve: stage (" << (j + 1) << "," << (i + 1)
            << ") twist is not bounded (probe rate " << rate
            << " per step); the block equation has no bounded solution";
        throw LabError(ErrorCode::twist_not_bounded, msg.str());
      }

      // Residual of the solved block in its own stage equation.
      for (const TorusPoint& p : probes) {
        const TorusPoint fp = step(sys, p, 1);
        const Mat ex = bs.eval(p);
        const Mat efx = bs.eval(fp);
        const Mat twisted = st->db.block(j, j, p).partialPivLu().solve(
            efx * st->da.block(i, i, p));
        const double res =
            (ex - twisted - phi_eval(p)).norm() / (1.0 + ex.norm());
        worst_res = std::max(worst_res, res);
      }
      st->c[{j, i}] = std::move(bs);
    }
  }

  ConjugacySection out;
  out.route = routes.empty() ? "supplied" : "";
  for (const auto& r : routes) {
    if (!out.route.empty()) out.route += "+";
    out.route += r;
  }
  out.solve_residual = worst_res;
  out.eval = [st, d, k](const TorusPoint& x) -> Mat {
    Mat c = Mat::Zero(d, d);
    for (int j = 0; j < k; ++j)
      for (int i = j; i < k; ++i)
        c += st->db.complements[j] * st->c.at({j, i}).eval(x) *
             st->da.complements[i].transpose() * st->da.metric;
    return c;
  };
  out.eval_inverse = [ev = out.eval](const TorusPoint& x) -> Mat {
    return ev(x).partialPivLu().inverse();
  };
  bool all_poly = true;
  for (const auto& [key, b] : st->c) all_poly = all_poly && b.poly.has_value();
  if (all_poly) {
    TrigPolyMat total(d, d, bd);
    for (int j = 0; j < k; ++j)
      for (int i = j; i < k; ++i)
        total = total +
                TrigPolyMat::constant(st->db.complements[j], bd) *
                    *st->c.at({j, i}).poly *
                    TrigPolyMat::constant(
                        st->da.complements[i].transpose() * st->da.metric, bd);
    out.closed_form = total.pruned();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residual reports

PropertyRow conjugacy_residual(const Cocycle& a_coc, const Cocycle& b_coc,
                               const ConjugacySection& c, int samples,
                               uint64_t seed) {
  require(samples >= 1, ErrorCode::invalid_argument, "samples >= 1");
  require(c.eval != nullptr, ErrorCode::invalid_argument,
          "conjugacy_residual: section has no evaluator");
  const auto& sys = *a_coc.base;
  SampleStream rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const TorusPoint x = sample_point(rng, s, sys.dim());
    const TorusPoint fx = step(sys, x, 1);
    const Mat cx = c.eval(x);
    {
      Eigen::JacobiSVD<Mat> svd(cx);
      const double smin = svd.singularValues().minCoeff();
      const double smax = svd.singularValues().maxCoeff();
      if (!(smin > 0.0) || smax / smin > 1e12) {
        std::ostringstream msg;
        msg << "conjugacy_residual: section is numerically singular at x = ["
            << x.coords.transpose() << "] (cond "
            << (smin > 0 ? smax / smin
                         : std::numeric_limits<double>::infinity())
            << ")";
        throw LabError(ErrorCode::singular_conjugacy, msg.str());
      }
    }
    const Mat bx = b_coc.generator(x);
    const Mat r =
        bx - c.eval(fx) * a_coc.generator(x) * cx.partialPivLu().inverse();
    worst = std::max(worst, r.norm() / std::max(bx.norm(), 1e-300));
  }
  PropertyRow row;
  row.property = "conjugacy";
  row.samples = samples;
  row.max_residual = worst;
  row.n_max = 1;
  row.verdict = worst <= 1e-6 ? Verdict::pass : Verdict::fail;
  return row;
}

PropertyRow intertwining_residual(const Cocycle& a_coc, const Cocycle& b_coc,
                                  const ConjugacySection& c, int samples,
                                  double tol, uint64_t seed) {
  require(samples >= 1, ErrorCode::invalid_argument, "samples >= 1");
  require(c.eval != nullptr, ErrorCode::invalid_argument,
          "intertwining_residual: section has no evaluator");
  const auto& sys = *a_coc.base;
  SampleStream rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const TorusPoint x = sample_point(rng, s, sys.dim());
    for (int kind = 0; kind < 2; ++kind) {
      const LeafSelector leaf{kind == 0 ? LeafSelector::stable
                                        : LeafSelector::unstable,
                              0};
      const double sgn = rng.uniform(s, 16 + kind) < 0.5 ? -1.0 : 1.0;
      const double t =
          sgn * (0.25 + 0.5 * rng.uniform(s, 8 + kind)) * sys.leaf_radius();
      const TorusPoint y = leaf_point(sys, x, leaf, t);
      const Mat ha = (kind == 0 ? stable_holonomy(a_coc, x, y, tol)
                                : unstable_holonomy(a_coc, x, y, tol))
                         .matrix;
      const Mat hb = (kind == 0 ? stable_holonomy(b_coc, x, y, tol)
                                : unstable_holonomy(b_coc, x, y, tol))
                         .matrix;
      const Mat r = hb - c.eval(y) * ha * c.eval(x).partialPivLu().inverse();
      worst = std::max(worst, r.norm());
    }
  }
  PropertyRow row;
  row.property = "intertwining";
  row.samples = samples;
  row.max_residual = worst;
  row.n_max = 1;
  row.verdict = worst <= 1e-6 ? Verdict::pass : Verdict::fail;
  return row;
}

HolderEstimate holder_exponent_estimate(const MatrixEvaluator& section,
                                        const HyperbolicAutomorphism& sys,
                                        const LeafSelector& leaf, int x_samples,
                                        const std::vector<double>& scales,
                                        uint64_t seed) {
  require(section != nullptr, ErrorCode::invalid_argument,
          "holder_exponent_estimate: null section");
  require(x_samples >= 1, ErrorCode::invalid_argument, "x_samples >= 1");
  require(scales.size() >= 4, ErrorCode::invalid_argument,
          "holder_exponent_estimate: at least four scales required");
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (double t : scales) {
    require(t > 0.0, ErrorCode::invalid_argument,
            "holder_exponent_estimate: scales must be positive");
    mn = std::min(mn, t);
    mx = std::max(mx, t);
  }
  require(mx <= sys.leaf_radius(), ErrorCode::invalid_argument,
          "holder_exponent_estimate: scales exceed the leaf radius");
  require(mx / mn >= 100.0, ErrorCode::invalid_argument,
          "holder_exponent_estimate: scales must span at least two decades");

  SampleStream rng(seed);
  std::vector<TorusPoint> pts;
  for (int s = 0; s < x_samples; ++s)
    pts.push_back(sample_point(rng, s, sys.dim()));

  std::vector<double> lx, ly;
  for (double t : scales) {
    double dmax = 0.0;
    for (const TorusPoint& x : pts) {
      const TorusPoint y = leaf_point(sys, x, leaf, t);
      dmax = std::max(dmax, (section(x) - section(y)).norm());
    }
    if (dmax > 1e-13) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(dmax));
    }
  }
  require(lx.size() >= 2, ErrorCode::insufficient_signal,
          "holder_exponent_estimate: section differences sit at the noise "
          "floor; no slope to fit");

  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    syy += ly[i] * ly[i];
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  HolderEstimate est;
  est.beta_hat = vxy / vxx;
  est.r_squared = vyy > 0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  est.used_scales = static_cast<int>(lx.size());
  return est;
}

// ---------------------------------------------------------------------------
// invariant_splitting

namespace {

struct ModulusGroups {
  std::vector<double> moduli;        // ascending
  std::vector<int> mult;             // group sizes
  std::vector<Mat> reference_bases;  // orthonormal, per group
};

ModulusGroups modulus_groups(const Mat& reference) {
  const int d = static_cast<int>(reference.rows());
  Eigen::EigenSolver<Mat> es(reference);
  require(es.info() == Eigen::Success, ErrorCode::degenerate,
          "invariant_splitting: eigensolve of the reference failed");
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
  });
  ModulusGroups g;
  std::vector<std::vector<int>> members;
  for (int idx : order) {
    const double m = std::abs(es.eigenvalues()[idx]);
    if (!g.moduli.empty() && m <= g.moduli.back() * (1.0 + 1e-6)) {
      members.back().push_back(idx);
      g.moduli.back() = std::max(g.moduli.back(), m);
    } else {
      g.moduli.push_back(m);
      members.push_back({idx});
    }
  }
  for (const auto& mem : members) {
    Mat raw(d, 2 * mem.size());
    Eigen::Index col = 0;
    for (int idx : mem) {
      raw.col(col++) = es.eigenvectors().col(idx).real();
      raw.col(col++) = es.eigenvectors().col(idx).imag();
    }
    Eigen::JacobiSVD<Mat> svd(raw.leftCols(col), Eigen::ComputeThinU);
    const double smax = svd.singularValues()(0);
    int rank = 0;
    for (Eigen::Index s = 0; s < svd.singularValues().size(); ++s)
      if (svd.singularValues()(s) > 1e-8 * smax) ++rank;
    require(rank == static_cast<int>(mem.size()), ErrorCode::degenerate,
            "invariant_splitting: reference eigenbasis rank mismatch");
    g.reference_bases.push_back(svd.matrixU().leftCols(rank));
    g.mult.push_back(rank);
  }
  return g;
}

// Cumulative counts: ctop[i] = dims of groups with modulus >= rho_i,
// slow[i] = dims of groups with modulus <= rho_i.
struct GroupCuts {
  std::vector<int> ctop, slow;
};

GroupCuts group_cuts(const ModulusGroups& g) {
  const int ng = static_cast<int>(g.moduli.size());
  GroupCuts cuts;
  cuts.ctop.resize(ng);
  cuts.slow.resize(ng);
  int acc = 0;
  for (int i = ng - 1; i >= 0; --i) {
    acc += g.mult[i];
    cuts.ctop[i] = acc;
  }
  acc = 0;
  for (int i = 0; i < ng; ++i) {
    acc += g.mult[i];
    cuts.slow[i] = acc;
  }
  return cuts;
}

// The splitting at one point: fast filtration from products ending at x,
// slow filtration from products starting at x, intersected per group.
std::vector<Mat> splitting_at_point(const Cocycle& b_coc,
                                    const ModulusGroups& groups,
                                    const GroupCuts& cuts, int n_power,
                                    const TorusPoint& x) {
  const auto& sys = *b_coc.base;
  const int d = b_coc.dimension;
  const int ng = static_cast<int>(groups.moduli.size());
  const double angle_cos = std::cos(1e-6);
  auto check_gaps = [&](const Vec& sv) {
    for (int i = 0; i + 1 < ng; ++i) {
      const int cut = cuts.ctop[i + 1];  // boundary between groups i+1 and i
      if (!(sv(cut - 1) >= 2.0 * sv(cut))) {
        std::ostringstream msg;
        msg << "invariant_splitting: singular values at the " << n_power
            << "-step products separate groups by only "
            << (sv(cut) > 0 ? sv(cut - 1) / sv(cut)
                            : std::numeric_limits<double>::infinity())
            << " (< 2) at boundary " << cut;
        throw LabError(ErrorCode::gap_too_small, msg.str());
      }
    }
  };

  // Product ending at x, accumulated along the backward orbit so the fast
  // filtration it defines lands at x itself; re-iterating forward from
  // f^{-n}x drifts off the orbit at the top exponent's rate. Only the
  // directions matter below, so a plain norm renormalization suffices.
  Mat pend = Mat::Identity(d, d);
  {
    TorusPoint y = x;
    for (int k = 0; k < n_power; ++k) {
      y = step(sys, y, -1);
      pend = pend * b_coc.generator(y);
      pend /= pend.norm();
    }
  }
  const ScaledMatrix pfwd = iterate_scaled(b_coc, x, n_power);
  Eigen::JacobiSVD<Mat> send(pend, Eigen::ComputeFullU);
  Eigen::JacobiSVD<Mat> sfwd(pfwd.matrix, Eigen::ComputeFullV);
  check_gaps(send.singularValues());
  check_gaps(sfwd.singularValues());
  std::vector<Mat> spaces;
  for (int i = 0; i < ng; ++i) {
    const Mat fast = send.matrixU().leftCols(cuts.ctop[i]);
    const Mat slo = sfwd.matrixV().rightCols(cuts.slow[i]);
    Eigen::JacobiSVD<Mat> isvd(fast.transpose() * slo, Eigen::ComputeFullU);
    int count = 0;
    for (Eigen::Index s = 0; s < isvd.singularValues().size(); ++s)
      if (isvd.singularValues()(s) >= angle_cos) ++count;
    if (count != groups.mult[i]) {
      std::ostringstream msg;
      msg << "invariant_splitting: filtrations meet in dimension " << count
          << " instead of " << groups.mult[i] << " for group " << (i + 1)
          << "; the splitting is not resolved at n_power = " << n_power;
      throw LabError(ErrorCode::gap_too_small, msg.str());
    }
    spaces.push_back(
        orthonormal_columns(fast * isvd.matrixU().leftCols(count)));
  }
  return spaces;
}

}  // namespace

SplittingReport invariant_splitting(const Cocycle& b_coc, const Mat& reference,
                                    int n_power, int samples, uint64_t seed) {
  require(n_power >= 2, ErrorCode::invalid_argument, "n_power >= 2");
  require(samples >= 1, ErrorCode::invalid_argument, "samples >= 1");
  const int d = b_coc.dimension;
  require(reference.rows() == d && reference.cols() == d,
          ErrorCode::invalid_argument,
          "invariant_splitting: reference shape mismatch");
  const auto& sys = *b_coc.base;
  const ModulusGroups groups = modulus_groups(reference);
  const int ng = static_cast<int>(groups.moduli.size());
  require(ng >= 2, ErrorCode::invalid_argument,
          "invariant_splitting: reference has a single modulus group; "
          "nothing to split");

  const GroupCuts cuts = group_cuts(groups);
  auto splitting_at = [&](const TorusPoint& x) {
    return splitting_at_point(b_coc, groups, cuts, n_power, x);
  };

  SplittingReport rep;
  rep.moduli = groups.moduli;
  rep.multiplicities = groups.mult;
  rep.samples = samples;
  SampleStream rng(seed);
  for (int s = 0; s < samples; ++s) {
    const TorusPoint x = sample_point(rng, s, sys.dim());
    const TorusPoint fx = step(sys, x, 1);
    const std::vector<Mat> ex = splitting_at(x);
    const std::vector<Mat> efx = splitting_at(fx);
    const Mat bx = b_coc.generator(x);
    for (int i = 0; i < ng; ++i) {
      rep.max_axis_distance = std::max(
          rep.max_axis_distance, principal_angle(ex[i], groups.reference_bases[i]));
      rep.max_invariance_residual =
          std::max(rep.max_invariance_residual,
                   principal_angle(orthonormal_columns(bx * ex[i]), efx[i]));
    }
    if (s == 0) {
      // Per-group exponents by the QR iteration: applying the full n-step
      // product to a frame floors the contracting directions at roundoff
      // (eps times the top singular value), so renormalize stepwise instead.
      // Seed with the estimated frames in descending-modulus order; the k-th
      // diagonal of R then tracks the k-th filtration quotient.
      Mat q(d, d);
      {
        int col = 0;
        for (int i = ng - 1; i >= 0; --i) {
          q.middleCols(col, groups.mult[i]) = ex[i];
          col += groups.mult[i];
        }
        q = orthonormal_columns(q);
      }
      Vec acc = Vec::Zero(d);
      TorusPoint y = x;
      for (int k = 0; k < n_power; ++k) {
        Eigen::HouseholderQR<Mat> qr(b_coc.generator(y) * q);
        const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
        q = qr.householderQ() * Mat::Identity(d, d);
        for (int j = 0; j < d; ++j) acc(j) += std::log(std::abs(r(j, j)));
        y = step(sys, y, 1);
      }
      for (int i = 0; i < ng; ++i) {
        double m = 0.0;
        for (int j = d - cuts.slow[i]; j < d - cuts.slow[i] + groups.mult[i]; ++j)
          m += acc(j);
        rep.block_exponents.push_back(
            m / (static_cast<double>(groups.mult[i]) * n_power));
      }
    }
  }
  rep.verdict = rep.max_invariance_residual <= 1e-3 ? Verdict::pass
                                                    : Verdict::fail;
  return rep;
}

std::vector<Mat> splitting_frames(const Cocycle& b_coc, const Mat& reference,
                                  int n_power, const TorusPoint& x) {
  require(n_power >= 2, ErrorCode::invalid_argument, "n_power >= 2");
  const int d = b_coc.dimension;
  require(reference.rows() == d && reference.cols() == d,
          ErrorCode::invalid_argument,
          "splitting_frames: reference shape mismatch");
  const ModulusGroups groups = modulus_groups(reference);
  require(groups.moduli.size() >= 2, ErrorCode::invalid_argument,
          "splitting_frames: reference has a single modulus group");
  return splitting_at_point(b_coc, groups, group_cuts(groups), n_power, x);
}

}  // namespace clab
