#pragma once

#include <map>
#include <vector>

#include "clab/fields.hpp"

namespace clab {

using CMat = Eigen::MatrixXcd;

// Matrix-valued trigonometric polynomial in exact coefficient form,
//
//   F(x) = Σ_k  c_k · e^{2πi k·x},   c_{-k} = conj(c_k)  (real-valued field),
//
// closed under +, ·, and precomposition with an integer linear map of the
// torus. This is the workhorse behind the frequency-domain conjugacy solver:
// products and compositions are computed on coefficients with no sampling
// error, so residuals of solved sections bottom out at rounding noise.
class TrigPolyMat {
 public:
  using Key = std::vector<long long>;  // wave vector, length = base_dim

  TrigPolyMat() = default;
  TrigPolyMat(int rows, int cols, int base_dim);

  static TrigPolyMat constant(const Mat& c, int base_dim = 2);
  static TrigPolyMat identity(int d, int base_dim = 2);
  // From cosine/sine data: c0 + Σ [P cos + Q sin].
  static TrigPolyMat from_real_terms(const Mat& c0,
                                     const std::vector<FieldTerm>& terms,
                                     int base_dim = 2);
  static TrigPolyMat from_vector_field(const VectorField& f);
  // Valid when the field's Fourier exponent is nilpotent (its finite
  // exponential series is again a trig polynomial); error otherwise.
  static TrigPolyMat from_matrix_field(const MatrixField& f);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int base_dim() const { return base_dim_; }
  const std::map<Key, CMat>& coefficients() const { return coef_; }
  bool empty() const { return coef_.empty(); }

  // Coefficient accessors; add enforces the Hermitian pairing.
  CMat coefficient(const Key& k) const;
  void add_coefficient(const Key& k, const CMat& c);

  TrigPolyMat operator+(const TrigPolyMat& o) const;
  TrigPolyMat operator-(const TrigPolyMat& o) const;
  TrigPolyMat operator*(const TrigPolyMat& o) const;  // pointwise matrix product
  TrigPolyMat scaled(double s) const;

  // G(x) = F(M x) for an integer matrix M: exact frequency relabeling.
  TrigPolyMat precompose(const IMat& M) const;
  // G(x) = F(f x) for the automorphism's matrix.
  TrigPolyMat precompose(const HyperbolicAutomorphism& sys) const {
    return precompose(sys.matrix());
  }

  // Inverse of I + N with N(x) nilpotent at every x as a coefficient matrix
  // family: uses the finite Neumann series; error if powers fail to vanish.
  TrigPolyMat unipotent_inverse(int max_power = 16) const;

  Mat evaluate(const TorusPoint& x) const;  // imaginary residue checked
  double max_coefficient_norm() const;
  TrigPolyMat pruned(double eps = 1e-14) const;  // drop negligible modes

  // Column polynomials back in cosine/sine form; inverse of
  // from_vector_field for single-column polynomials.
  VectorField to_vector_field() const;

 private:
  int rows_ = 0, cols_ = 0, base_dim_ = 0;
  std::map<Key, CMat> coef_;
};

}  // namespace clab
