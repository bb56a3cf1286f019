#include "clab/trigpoly.hpp"

#include <cmath>

namespace clab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

TrigPolyMat::Key negated(const TrigPolyMat::Key& k) {
  TrigPolyMat::Key n(k.size());
  for (size_t i = 0; i < k.size(); ++i) n[i] = -k[i];
  return n;
}
}  // namespace

TrigPolyMat::TrigPolyMat(int rows, int cols, int base_dim)
    : rows_(rows), cols_(cols), base_dim_(base_dim) {
  require(rows >= 1 && cols >= 1 && base_dim >= 1, ErrorCode::invalid_argument,
          "trig polynomial: bad shape");
}

TrigPolyMat TrigPolyMat::constant(const Mat& c, int base_dim) {
  TrigPolyMat f(static_cast<int>(c.rows()), static_cast<int>(c.cols()),
                base_dim);
  f.add_coefficient(Key(base_dim, 0), c.cast<std::complex<double>>());
  return f;
}

TrigPolyMat TrigPolyMat::identity(int d, int base_dim) {
  return constant(Mat::Identity(d, d), base_dim);
}

CMat TrigPolyMat::coefficient(const Key& k) const {
  auto it = coef_.find(k);
  if (it != coef_.end()) return it->second;
  return CMat::Zero(rows_, cols_);
}

void TrigPolyMat::add_coefficient(const Key& k, const CMat& c) {
  require(static_cast<int>(k.size()) == base_dim_, ErrorCode::invalid_argument,
          "trig polynomial: wave vector length mismatch");
  require(c.rows() == rows_ && c.cols() == cols_, ErrorCode::invalid_argument,
          "trig polynomial: coefficient shape mismatch");
  auto it = coef_.find(k);
  if (it == coef_.end())
    coef_.emplace(k, c);
  else
    it->second += c;
}

TrigPolyMat TrigPolyMat::from_real_terms(const Mat& c0,
                                         const std::vector<FieldTerm>& terms,
                                         int base_dim) {
  TrigPolyMat f = constant(c0, base_dim);
  const std::complex<double> half(0.5, 0.0), half_i(0.0, 0.5);
  for (const auto& t : terms) {
    Key k(t.k.size());
    for (Eigen::Index i = 0; i < t.k.size(); ++i) k[i] = t.k[i];
    CMat P = t.P.cast<std::complex<double>>();
    CMat Q = t.Q.cast<std::complex<double>>();
    // P cos θ + Q sin θ = (P/2 - iQ/2) e^{iθ} + (P/2 + iQ/2) e^{-iθ}
    f.add_coefficient(k, half * P - half_i * Q);
    f.add_coefficient(negated(k), half * P + half_i * Q);
  }
  return f;
}

TrigPolyMat TrigPolyMat::from_vector_field(const VectorField& vf) {
  std::vector<FieldTerm> terms;
  for (const auto& t : vf.terms) {
    FieldTerm ft;
    ft.k = t.k;
    ft.P = t.p;
    ft.Q = t.q;
    terms.push_back(std::move(ft));
  }
  return from_real_terms(vf.constant_term, terms, vf.base_dim);
}

TrigPolyMat TrigPolyMat::from_matrix_field(const MatrixField& mf) {
  TrigPolyMat expo = from_real_terms(Mat::Zero(mf.dimension, mf.dimension),
                                     mf.terms, mf.base_dim);
  // exp(S) with S pointwise nilpotent: S^d = 0, so the series is finite and
  // stays a trig polynomial.
  TrigPolyMat result = identity(mf.dimension, mf.base_dim);
  TrigPolyMat power = identity(mf.dimension, mf.base_dim);
  double factorial = 1.0;
  for (int p = 1; p <= mf.dimension; ++p) {
    power = (power * expo).pruned();
    factorial *= p;
    if (power.empty()) break;
    result = result + power.scaled(1.0 / factorial);
  }
  require((power * expo).pruned(1e-12).empty(), ErrorCode::invalid_argument,
          "matrix field exponent is not nilpotent; no exact polynomial form");
  return (constant(mf.constant_factor, mf.base_dim) * result).pruned();
}

TrigPolyMat TrigPolyMat::operator+(const TrigPolyMat& o) const {
  require(rows_ == o.rows_ && cols_ == o.cols_ && base_dim_ == o.base_dim_,
          ErrorCode::invalid_argument, "trig polynomial: shape mismatch in +");
  TrigPolyMat r = *this;
  for (const auto& [k, c] : o.coef_) r.add_coefficient(k, c);
  return r;
}

TrigPolyMat TrigPolyMat::operator-(const TrigPolyMat& o) const {
  return *this + o.scaled(-1.0);
}

TrigPolyMat TrigPolyMat::scaled(double s) const {
  TrigPolyMat r = *this;
  for (auto& [k, c] : r.coef_) c *= s;
  return r;
}

TrigPolyMat TrigPolyMat::operator*(const TrigPolyMat& o) const {
  require(cols_ == o.rows_ && base_dim_ == o.base_dim_,
          ErrorCode::invalid_argument, "trig polynomial: shape mismatch in *");
  TrigPolyMat r(rows_, o.cols_, base_dim_);
  for (const auto& [ka, ca] : coef_)
    for (const auto& [kb, cb] : o.coef_) {
      Key k(ka.size());
      for (size_t i = 0; i < ka.size(); ++i) k[i] = ka[i] + kb[i];
      r.add_coefficient(k, ca * cb);
    }
  return r;
}

TrigPolyMat TrigPolyMat::precompose(const IMat& M) const {
  require(M.rows() == base_dim_ && M.cols() == base_dim_,
          ErrorCode::invalid_argument,
          "trig polynomial: precompose matrix has wrong shape");
  TrigPolyMat r(rows_, cols_, base_dim_);
  // coefficient of e^{2πi k·x} in F(Mx) sits at M^T k
  for (const auto& [k, c] : coef_) {
    Key kk(k.size(), 0);
    for (int i = 0; i < base_dim_; ++i)
      for (int j = 0; j < base_dim_; ++j) kk[i] += M(j, i) * k[j];
    r.add_coefficient(kk, c);
  }
  return r;
}

TrigPolyMat TrigPolyMat::unipotent_inverse(int max_power) const {
  require(rows_ == cols_, ErrorCode::invalid_argument,
          "unipotent inverse needs a square field");
  TrigPolyMat n = *this - identity(rows_, base_dim_);
  TrigPolyMat result = identity(rows_, base_dim_);
  TrigPolyMat power = identity(rows_, base_dim_);
  double sign = 1.0;
  for (int p = 1; p <= max_power; ++p) {
    power = (power * n).pruned();
    if (power.empty()) return result.pruned();
    sign = -sign;
    result = result + power.scaled(sign);
  }
  throw LabError(ErrorCode::invalid_argument,
                 "unipotent inverse: nilpotency not reached; "
                 "field is not I + nilpotent");
}

Mat TrigPolyMat::evaluate(const TorusPoint& x) const {
  require(x.dim() == base_dim_, ErrorCode::invalid_argument,
          "trig polynomial evaluated at point of wrong dimension");
  CMat v = CMat::Zero(rows_, cols_);
  for (const auto& [k, c] : coef_) {
    double ph = 0.0;
    for (int i = 0; i < base_dim_; ++i) ph += double(k[i]) * x.coords[i];
    v += c * std::exp(std::complex<double>(0.0, kTwoPi * ph));
  }
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  require(v.imag().cwiseAbs().maxCoeff() < 1e-9 * scale, ErrorCode::internal,
          "trig polynomial lost Hermitian symmetry (imaginary residue)");
  return v.real();
}

double TrigPolyMat::max_coefficient_norm() const {
  double m = 0.0;
  for (const auto& [k, c] : coef_) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

TrigPolyMat TrigPolyMat::pruned(double eps) const {
  const double scale = std::max(1.0, max_coefficient_norm());
  TrigPolyMat r(rows_, cols_, base_dim_);
  for (const auto& [k, c] : coef_)
    if (c.cwiseAbs().maxCoeff() > eps * scale) r.coef_.emplace(k, c);
  return r;
}

VectorField TrigPolyMat::to_vector_field() const {
  require(cols_ == 1, ErrorCode::invalid_argument,
          "only single-column polynomials convert to a vector field");
  Vec constant = Vec::Zero(rows_);
  std::vector<VectorTerm> terms;
  for (const auto& [k, c] : coef_) {
    // take each +/-k pair once, via its representative with positive
    // leading entry; symmetry makes the other half redundant
    bool zero_key = true, positive = false;
    for (long long ki : k) {
      if (ki != 0) {
        zero_key = false;
        positive = ki > 0;
        break;
      }
    }
    if (zero_key) {
      require(c.imag().cwiseAbs().maxCoeff() < 1e-9,
              ErrorCode::internal, "constant coefficient must be real");
      constant = c.real().col(0);
      continue;
    }
    if (!positive) continue;
    VectorTerm t;
    t.k = IVec(base_dim_);
    for (int i = 0; i < base_dim_; ++i) t.k[i] = k[i];
    t.p = 2.0 * c.real().col(0);   // c_k = p/2 - i q/2
    t.q = -2.0 * c.imag().col(0);
    terms.push_back(std::move(t));
  }
  return make_vector_field(constant, terms, base_dim_);
}

}  // namespace clab
