#include "clab/fields.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"

namespace clab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_term_shapes(int d, int m, const IVec& k, Eigen::Index pr,
                       Eigen::Index pc, Eigen::Index qr, Eigen::Index qc) {
  require(k.size() == m, ErrorCode::invalid_argument,
          "field term: wave vector length must match base dimension");
  require(pr == d && pc == d && qr == d && qc == d,
          ErrorCode::invalid_argument,
          "field term: coefficient shape must match fiber dimension");
}

double phase(const IVec& k, const TorusPoint& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < k.size(); ++i) s += double(k[i]) * x.coords[i];
  return kTwoPi * s;
}

}  // namespace

MatrixField make_matrix_field(Mat constant_factor, std::vector<FieldTerm> terms,
                              int base_dim) {
  const int d = static_cast<int>(constant_factor.rows());
  require(d >= 1 && constant_factor.cols() == d, ErrorCode::invalid_argument,
          "constant factor must be square");
  require(base_dim >= 1, ErrorCode::invalid_argument, "base dimension >= 1");
  Eigen::FullPivLU<Mat> lu(constant_factor);
  require(lu.isInvertible(), ErrorCode::degenerate,
          "constant factor must be invertible");
  for (const auto& t : terms)
    check_term_shapes(d, base_dim, t.k, t.P.rows(), t.P.cols(), t.Q.rows(),
                      t.Q.cols());
  MatrixField f;
  f.dimension = d;
  f.base_dim = base_dim;
  f.constant_factor = std::move(constant_factor);
  f.terms = std::move(terms);
  return f;
}

MatrixField constant_field(Mat c0, int base_dim) {
  return make_matrix_field(std::move(c0), {}, base_dim);
}

Mat field_exponent(const MatrixField& f, const TorusPoint& x) {
  require(x.dim() == f.base_dim, ErrorCode::invalid_argument,
          "field evaluated at point of wrong dimension");
  Mat s = Mat::Zero(f.dimension, f.dimension);
  for (const auto& t : f.terms) {
    const double ph = phase(t.k, x);
    s += t.P * std::cos(ph) + t.Q * std::sin(ph);
  }
  return s;
}

Mat evaluate(const MatrixField& f, const TorusPoint& x) {
  if (f.terms.empty()) return f.constant_factor;
  return f.constant_factor * field_exponent(f, x).exp();
}

VectorField make_vector_field(Vec constant_term, std::vector<VectorTerm> terms,
                              int base_dim) {
  const int d = static_cast<int>(constant_term.size());
  require(d >= 1, ErrorCode::invalid_argument, "empty vector field");
  require(base_dim >= 1, ErrorCode::invalid_argument, "base dimension >= 1");
  for (const auto& t : terms) {
    require(t.k.size() == base_dim, ErrorCode::invalid_argument,
            "field term: wave vector length must match base dimension");
    require(t.p.size() == d && t.q.size() == d, ErrorCode::invalid_argument,
            "field term: coefficient length must match fiber dimension");
  }
  VectorField f;
  f.dimension = d;
  f.base_dim = base_dim;
  f.constant_term = std::move(constant_term);
  f.terms = std::move(terms);
  return f;
}

Vec evaluate(const VectorField& f, const TorusPoint& x) {
  require(x.dim() == f.base_dim, ErrorCode::invalid_argument,
          "field evaluated at point of wrong dimension");
  Vec v = f.constant_term;
  for (const auto& t : f.terms) {
    const double ph = phase(t.k, x);
    v += t.p * std::cos(ph) + t.q * std::sin(ph);
  }
  return v;
}

// --- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {  // row-major flattening
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

Mat mat_from_json(const json& a, int rows, int cols, const char* what) {
  require(a.is_array() && static_cast<int>(a.size()) == rows * cols,
          ErrorCode::io_error, std::string("bad matrix payload in ") + what);
  Mat m(rows, cols);
  int i = 0;
  for (const auto& v : a) {
    require(v.is_number(), ErrorCode::io_error,
            std::string("non-numeric matrix entry in ") + what);
    m(i / cols, i % cols) = v.get<double>();
    ++i;
  }
  return m;
}

IVec ivec_from_json(const json& a, const char* what) {
  require(a.is_array() && !a.empty(), ErrorCode::io_error,
          std::string("bad wave vector in ") + what);
  IVec k(a.size());
  int i = 0;
  for (const auto& v : a) {
    require(v.is_number_integer(), ErrorCode::io_error,
            std::string("wave vector entries must be integers in ") + what);
    k[i++] = v.get<long long>();
  }
  return k;
}

}  // namespace

std::string field_to_json(const MatrixField& f) {
  json j;
  j["dimension"] = f.dimension;
  j["base_dimension"] = f.base_dim;
  j["constant_factor"] = mat_to_json(f.constant_factor);
  json terms = json::array();
  for (const auto& t : f.terms) {
    json jt;
    json k = json::array();
    for (Eigen::Index i = 0; i < t.k.size(); ++i) k.push_back(t.k[i]);
    jt["k"] = k;
    jt["P"] = mat_to_json(t.P);
    jt["Q"] = mat_to_json(t.Q);
    terms.push_back(jt);
  }
  j["terms"] = terms;
  return j.dump();
}

MatrixField field_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    require(j.contains("dimension") && j["dimension"].is_number_integer(),
            ErrorCode::io_error, "matrix field: missing dimension");
    const int d = j["dimension"].get<int>();
    require(d >= 1 && d <= 64, ErrorCode::io_error,
            "matrix field: dimension out of range");
    int m = j.value("base_dimension", 2);
    std::vector<FieldTerm> terms;
    if (j.contains("terms")) {
      for (const auto& jt : j["terms"]) {
        FieldTerm t;
        t.k = ivec_from_json(jt.at("k"), "terms[].k");
        if (!j.contains("base_dimension")) m = static_cast<int>(t.k.size());
        t.P = mat_from_json(jt.at("P"), d, d, "terms[].P");
        t.Q = mat_from_json(jt.at("Q"), d, d, "terms[].Q");
        terms.push_back(std::move(t));
      }
    }
    Mat c0 = mat_from_json(j.at("constant_factor"), d, d, "constant_factor");
    return make_matrix_field(std::move(c0), std::move(terms), m);
  } catch (const LabError&) {
    throw;
  } catch (const std::exception& e) {
    throw LabError(ErrorCode::io_error,
                   std::string("matrix field: invalid JSON: ") + e.what());
  }
}

std::string field_to_json(const VectorField& f) {
  json j;
  j["dimension"] = f.dimension;
  j["base_dimension"] = f.base_dim;
  json c = json::array();
  for (Eigen::Index i = 0; i < f.constant_term.size(); ++i)
    c.push_back(f.constant_term[i]);
  j["constant_term"] = c;
  json terms = json::array();
  for (const auto& t : f.terms) {
    json jt;
    json k = json::array();
    for (Eigen::Index i = 0; i < t.k.size(); ++i) k.push_back(t.k[i]);
    jt["k"] = k;
    json p = json::array(), q = json::array();
    for (Eigen::Index i = 0; i < t.p.size(); ++i) {
      p.push_back(t.p[i]);
      q.push_back(t.q[i]);
    }
    jt["p"] = p;
    jt["q"] = q;
    terms.push_back(jt);
  }
  j["terms"] = terms;
  return j.dump();
}

VectorField vector_field_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    const int d = j.at("dimension").get<int>();
    require(d >= 1 && d <= 4096, ErrorCode::io_error,
            "vector field: dimension out of range");
    const int m = j.value("base_dimension", 2);
    Vec c0 = mat_from_json(j.at("constant_term"), d, 1, "constant_term");
    std::vector<VectorTerm> terms;
    if (j.contains("terms")) {
      for (const auto& jt : j["terms"]) {
        VectorTerm t;
        t.k = ivec_from_json(jt.at("k"), "terms[].k");
        t.p = mat_from_json(jt.at("p"), d, 1, "terms[].p");
        t.q = mat_from_json(jt.at("q"), d, 1, "terms[].q");
        terms.push_back(std::move(t));
      }
    }
    return make_vector_field(std::move(c0), std::move(terms), m);
  } catch (const LabError&) {
    throw;
  } catch (const std::exception& e) {
    throw LabError(ErrorCode::io_error,
                   std::string("vector field: invalid JSON: ") + e.what());
  }
}

}  // namespace clab
