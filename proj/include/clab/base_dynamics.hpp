#pragma once

#include <Eigen/Dense>
#include <vector>

#include "clab/errors.hpp"

namespace clab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

// A point on T^m = R^m/Z^m, coordinates kept in [0,1).
struct TorusPoint {
  Vec coords;

  TorusPoint() = default;
  explicit TorusPoint(Vec c);
  TorusPoint(double x0, double x1);  // the m=2 workhorse

  int dim() const { return static_cast<int>(coords.size()); }
  bool same_coords(const TorusPoint& o) const { return coords == o.coords; }
};

// Reduce a raw R^m vector into [0,1)^m.
Vec wrap_mod1(Vec v);

// Distance on the flat torus: minimum over integer translates of the
// Euclidean distance (coordinates minimized independently).
double torus_distance(const TorusPoint& a, const TorusPoint& b);

struct LeafSelector {
  enum Kind { stable, unstable } kind = stable;
  int direction_index = 0;
};

// An invariant eigen-direction of the base matrix: unit vector, paired with
// its (real) eigenvalue. Only real eigenvalues yield straight invariant
// leaf lines; complex pairs contribute to the invariant subspace but are not
// selectable as leaf directions.
struct LeafDirection {
  double eigenvalue = 0.0;
  Vec direction;
};

class HyperbolicAutomorphism {
 public:
  // Factory below; members are immutable after construction.
  const IMat& matrix() const { return L_; }
  const IMat& matrix_inverse() const { return Linv_; }
  int dim() const { return static_cast<int>(L_.rows()); }

  double nu() const { return nu_; }          // largest stable eigenvalue modulus
  double nu_hat() const { return nu_hat_; }  // smallest unstable eigenvalue modulus
  double leaf_radius() const { return leaf_radius_; }

  // Orthonormal bases of the stable / unstable invariant subspaces.
  const Mat& stable_basis() const { return stable_basis_; }
  const Mat& unstable_basis() const { return unstable_basis_; }

  // Real eigen-directions usable as leaf lines.
  const std::vector<LeafDirection>& leaf_directions(LeafSelector::Kind k) const {
    return k == LeafSelector::stable ? stable_dirs_ : unstable_dirs_;
  }
  const LeafDirection& leaf_direction(const LeafSelector& leaf) const;

  // The automorphism generated by L^{-1}. Stable and unstable roles swap.
  HyperbolicAutomorphism inverse() const;

  friend HyperbolicAutomorphism make_automorphism(const IMat& entries,
                                                  double leaf_radius);

 private:
  HyperbolicAutomorphism() = default;

  IMat L_, Linv_;
  Mat Ld_, Linvd_;  // double copies used in the hot loops
  double nu_ = 0.0, nu_hat_ = 0.0, leaf_radius_ = 0.4;
  Mat stable_basis_, unstable_basis_;
  std::vector<LeafDirection> stable_dirs_, unstable_dirs_;

  friend TorusPoint step(const HyperbolicAutomorphism&, const TorusPoint&, long long);
};

// Validates unimodularity and hyperbolicity, computes eigendata.
HyperbolicAutomorphism make_automorphism(const IMat& entries,
                                         double leaf_radius = 0.4);

// Convenience for row-major initializer data.
HyperbolicAutomorphism make_automorphism(int m, const long long* row_major,
                                         double leaf_radius = 0.4);

// f^n x, applied one generator step at a time (entries of L are small
// integers, so each step costs one exact small-int multiply + mod-1 wrap).
TorusPoint step(const HyperbolicAutomorphism& sys, const TorusPoint& x, long long n);

// x + t·v mod 1 along the selected eigen-direction.
TorusPoint leaf_point(const HyperbolicAutomorphism& sys, const TorusPoint& x,
                      const LeafSelector& leaf, double t);

// Exact orbit arithmetic for rational points p/q: numerators advance by the
// integer matrix mod q, so periodic orbits stay exactly periodic (a double
// orbit drifts off a period-p orbit after ~log(1/eps)/log(nu_hat) steps).
IVec step_rational(const HyperbolicAutomorphism& sys, const IVec& numerators,
                   long long q, long long n);

}  // namespace clab
