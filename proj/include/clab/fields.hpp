#pragma once

#include <string>
#include <vector>

#include "clab/base_dynamics.hpp"

namespace clab {

// One Fourier mode of a matrix-valued field: P·cos(2πk·x) + Q·sin(2πk·x).
struct FieldTerm {
  IVec k;
  Mat P, Q;
};

// Closed-form generator family
//
//   A(x) = C0 · exp( Σ_k [ P_k cos(2π k·x) + Q_k sin(2π k·x) ] )
//
// Invertibility is structural (exp of anything is invertible, C0 is checked
// once), and the dependence on x is real-analytic, so every Hölder class is
// available without further hypotheses.
struct MatrixField {
  int dimension = 0;  // fiber dimension d
  int base_dim = 0;   // torus dimension m
  Mat constant_factor;
  std::vector<FieldTerm> terms;
};

MatrixField make_matrix_field(Mat constant_factor, std::vector<FieldTerm> terms,
                              int base_dim = 2);
MatrixField constant_field(Mat c0, int base_dim = 2);

// The Fourier sum inside the exponential, evaluated at x.
Mat field_exponent(const MatrixField& f, const TorusPoint& x);
Mat evaluate(const MatrixField& f, const TorusPoint& x);

std::string field_to_json(const MatrixField& f);
MatrixField field_from_json(const std::string& text);

// Vector-valued sections share the Fourier-mode structure but are affine in
// the modes (no exponential): v(x) = c + Σ_k [p_k cos(2πk·x) + q_k sin(2πk·x)].
struct VectorTerm {
  IVec k;
  Vec p, q;
};

struct VectorField {
  int dimension = 0;
  int base_dim = 0;
  Vec constant_term;
  std::vector<VectorTerm> terms;
};

VectorField make_vector_field(Vec constant_term, std::vector<VectorTerm> terms,
                              int base_dim = 2);
Vec evaluate(const VectorField& f, const TorusPoint& x);

std::string field_to_json(const VectorField& f);
VectorField vector_field_from_json(const std::string& text);

}  // namespace clab
