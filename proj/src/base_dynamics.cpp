#include "clab/base_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace clab {

Vec wrap_mod1(Vec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double c = v[i] - std::floor(v[i]);
    if (c >= 1.0) c -= 1.0;  // floor rounding can leave exactly 1.0
    if (c < 0.0) c = 0.0;
    v[i] = c;
  }
  return v;
}

TorusPoint::TorusPoint(Vec c) : coords(wrap_mod1(std::move(c))) {}

TorusPoint::TorusPoint(double x0, double x1) {
  Vec c(2);
  c << x0, x1;
  coords = wrap_mod1(std::move(c));
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  require(a.dim() == b.dim(), ErrorCode::invalid_argument,
          "torus_distance: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    double d = std::fabs(a.coords[i] - b.coords[i]);
    d -= std::floor(d);
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

// Exact determinant by fraction-free elimination on int64 (entries are small
// integers, so the intermediates stay far from overflow at the sizes we use).
long long integer_determinant(IMat m) {
  const int n = static_cast<int>(m.rows());
  long long det = 1, denom = 1;
  for (int k = 0; k < n; ++k) {
    int pivot = -1;
    for (int r = k; r < n; ++r)
      if (m(r, k) != 0) { pivot = r; break; }
    if (pivot < 0) return 0;
    if (pivot != k) {
      m.row(pivot).swap(m.row(k));
      det = -det;
    }
    for (int r = k + 1; r < n; ++r) {
      for (int c = k + 1; c < n; ++c)
        m(r, c) = m(r, c) * m(k, k) - m(r, k) * m(k, c);
      m(r, k) = 0;
      if (k > 0) {
        for (int c = k + 1; c < n; ++c) m(r, c) /= denom;
      }
    }
    denom = m(k, k);
  }
  return det * m(n - 1, n - 1);
}

Mat orthonormal_basis_from_columns(const Mat& cols, int rank) {
  if (rank == 0) return Mat(cols.rows(), 0);
  Eigen::ColPivHouseholderQR<Mat> qr(cols);
  Mat q = qr.householderQ() * Mat::Identity(cols.rows(), rank);
  return q;
}

void fix_sign(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::fabs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

const LeafDirection& HyperbolicAutomorphism::leaf_direction(
    const LeafSelector& leaf) const {
  const auto& dirs = leaf_directions(leaf.kind);
  require(leaf.direction_index >= 0 &&
              leaf.direction_index < static_cast<int>(dirs.size()),
          ErrorCode::invalid_argument,
          "leaf selector: no real eigen-direction with that index");
  return dirs[static_cast<size_t>(leaf.direction_index)];
}

HyperbolicAutomorphism HyperbolicAutomorphism::inverse() const {
  return make_automorphism(Linv_, leaf_radius_);
}

HyperbolicAutomorphism make_automorphism(const IMat& entries, double leaf_radius) {
  require(entries.rows() == entries.cols() && entries.rows() >= 2,
          ErrorCode::invalid_argument, "base matrix must be square, m >= 2");
  require(leaf_radius > 0.0 && leaf_radius < 0.5, ErrorCode::invalid_argument,
          "leaf radius must lie in (0, 0.5)");
  const int m = static_cast<int>(entries.rows());

  const long long det = integer_determinant(entries);
  require(det == 1 || det == -1, ErrorCode::not_unimodular,
          "base matrix determinant is not +1 or -1");

  HyperbolicAutomorphism sys;
  sys.L_ = entries;
  sys.Ld_ = entries.cast<double>();
  sys.leaf_radius_ = leaf_radius;

  // Integer inverse via the adjugate: for det = ±1, L^{-1} = det · adj(L),
  // which we recover by rounding the double inverse.
  Mat inv_d = sys.Ld_.inverse();
  sys.Linv_ = (inv_d.array().round()).matrix().cast<long long>();
  require((sys.L_ * sys.Linv_ - IMat::Identity(m, m)).cwiseAbs().maxCoeff() == 0,
          ErrorCode::internal, "integer inverse reconstruction failed");
  sys.Linvd_ = sys.Linv_.cast<double>();

  Eigen::EigenSolver<Mat> es(sys.Ld_);
  require(es.info() == Eigen::Success, ErrorCode::internal,
          "eigendecomposition failed");

  Mat stable_cols(m, 2 * m), unstable_cols(m, 2 * m);
  int ns = 0, nu_count = 0;  // columns collected (real+imag parts)
  int dim_s = 0, dim_u = 0;  // true subspace dimensions
  double nu = 0.0, nu_hat = std::numeric_limits<double>::infinity();

  for (int i = 0; i < m; ++i) {
    const std::complex<double> lam = es.eigenvalues()[i];
    const double mod = std::abs(lam);
    require(std::fabs(mod - 1.0) > 1e-9, ErrorCode::not_hyperbolic,
            "base matrix has an eigenvalue on the unit circle");
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    const bool is_real = std::fabs(lam.imag()) < 1e-12;
    if (mod < 1.0) {
      nu = std::max(nu, mod);
      ++dim_s;
      stable_cols.col(ns++) = v.real();
      if (!is_real) stable_cols.col(ns++) = v.imag();
      if (is_real) {
        Vec dir = v.real();
        dir.normalize();
        fix_sign(dir);
        sys.stable_dirs_.push_back({lam.real(), dir});
      }
    } else {
      nu_hat = std::min(nu_hat, mod);
      ++dim_u;
      unstable_cols.col(nu_count++) = v.real();
      if (!is_real) unstable_cols.col(nu_count++) = v.imag();
      if (is_real) {
        Vec dir = v.real();
        dir.normalize();
        fix_sign(dir);
        sys.unstable_dirs_.push_back({lam.real(), dir});
      }
    }
  }
  require(dim_s > 0 && dim_u > 0, ErrorCode::not_hyperbolic,
          "base matrix must have both contracting and expanding directions");

  sys.nu_ = nu;
  sys.nu_hat_ = nu_hat;
  sys.stable_basis_ =
      orthonormal_basis_from_columns(stable_cols.leftCols(ns), dim_s);
  sys.unstable_basis_ =
      orthonormal_basis_from_columns(unstable_cols.leftCols(nu_count), dim_u);

  // Index 0 = the direction realizing the principal rate (slowest contraction
  // resp. slowest expansion), so the default selector matches nu / nu_hat.
  std::sort(sys.stable_dirs_.begin(), sys.stable_dirs_.end(),
            [](const LeafDirection& a, const LeafDirection& b) {
              return std::fabs(a.eigenvalue) > std::fabs(b.eigenvalue);
            });
  std::sort(sys.unstable_dirs_.begin(), sys.unstable_dirs_.end(),
            [](const LeafDirection& a, const LeafDirection& b) {
              return std::fabs(a.eigenvalue) < std::fabs(b.eigenvalue);
            });
  // Duplicate conjugate-pair entries can't appear (complex eigvals are
  // filtered out), so each entry here is a genuine invariant line.
  return sys;
}

HyperbolicAutomorphism make_automorphism(int m, const long long* row_major,
                                         double leaf_radius) {
  IMat e(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) e(r, c) = row_major[r * m + c];
  return make_automorphism(e, leaf_radius);
}

TorusPoint step(const HyperbolicAutomorphism& sys, const TorusPoint& x,
                long long n) {
  require(x.dim() == sys.dim(), ErrorCode::invalid_argument,
          "step: point dimension mismatch");
  Vec v = x.coords;
  const Mat& M = n >= 0 ? sys.Ld_ : sys.Linvd_;
  for (long long k = 0, kk = std::llabs(n); k < kk; ++k) v = wrap_mod1(M * v);
  TorusPoint y;
  y.coords = std::move(v);
  return y;
}

TorusPoint leaf_point(const HyperbolicAutomorphism& sys, const TorusPoint& x,
                      const LeafSelector& leaf, double t) {
  require(x.dim() == sys.dim(), ErrorCode::invalid_argument,
          "leaf_point: point dimension mismatch");
  require(std::fabs(t) <= sys.leaf_radius(), ErrorCode::leaf_radius_exceeded,
          "leaf parameter exceeds the local leaf radius");
  const LeafDirection& d = sys.leaf_direction(leaf);
  TorusPoint y;
  y.coords = wrap_mod1(x.coords + t * d.direction);
  return y;
}

IVec step_rational(const HyperbolicAutomorphism& sys, const IVec& numerators,
                   long long q, long long n) {
  require(q > 0, ErrorCode::invalid_argument, "denominator must be positive");
  require(numerators.size() == sys.dim(), ErrorCode::invalid_argument,
          "step_rational: dimension mismatch");
  const int m = sys.dim();
  IVec v = numerators;
  for (int i = 0; i < m; ++i) v[i] = ((v[i] % q) + q) % q;
  const IMat& M = n >= 0 ? sys.matrix() : sys.matrix_inverse();
  for (long long k = 0, kk = std::llabs(n); k < kk; ++k) {
    IVec w(m);
    for (int r = 0; r < m; ++r) {
      __int128 acc = 0;
      for (int c = 0; c < m; ++c)
        acc += static_cast<__int128>(M(r, c)) * v[c];
      long long rem = static_cast<long long>(acc % q);
      w[r] = (rem + q) % q;
    }
    v = std::move(w);
  }
  return v;
}

}  // namespace clab
