#include "clab/base_dynamics.hpp"

#include <cmath>

#include "clab/rng.hpp"
#include "doctest.h"

using namespace clab;

namespace {

const long long CAT[4] = {2, 1, 1, 1};

HyperbolicAutomorphism cat_map() { return make_automorphism(2, CAT); }

}  // namespace

TEST_CASE("cat map eigendata") {
  auto sys = cat_map();
  const double s5 = std::sqrt(5.0);
  CHECK(sys.nu_hat() == doctest::Approx((3.0 + s5) / 2.0).epsilon(1e-12));
  CHECK(sys.nu() == doctest::Approx((3.0 - s5) / 2.0).epsilon(1e-12));
  CHECK(sys.nu() * sys.nu_hat() == doctest::Approx(1.0).epsilon(1e-12));

  IMat expected_inv(2, 2);
  expected_inv << 1, -1, -1, 2;
  CHECK(sys.matrix_inverse() == expected_inv);

  // Eigen-directions are unit, sign-normalized, and genuinely invariant.
  for (auto kind : {LeafSelector::stable, LeafSelector::unstable}) {
    const auto& dirs = sys.leaf_directions(kind);
    REQUIRE(dirs.size() == 1);
    const Vec& v = dirs[0].direction;
    CHECK(v.norm() == doctest::Approx(1.0));
    CHECK(v[0] > 0.0);
    Vec image = sys.matrix().cast<double>() * v;
    CHECK((image - dirs[0].eigenvalue * v).norm() < 1e-12);
  }
}

TEST_CASE("validation rejects bad base matrices") {
  IMat nonuni(2, 2);
  nonuni << 2, 0, 0, 1;
  CHECK_THROWS_WITH_AS(make_automorphism(nonuni), doctest::Contains("determinant"),
                       LabError);
  try {
    make_automorphism(nonuni);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::not_unimodular);
  }

  IMat rot(2, 2);
  rot << 0, -1, 1, 0;  // det 1, spectrum on the unit circle
  CHECK_THROWS_AS(make_automorphism(rot), LabError);

  IMat shear(2, 2);
  shear << 1, 1, 0, 1;  // parabolic: eigenvalue 1 twice
  try {
    make_automorphism(shear);
    CHECK(false);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::not_hyperbolic);
  }

  CHECK_THROWS_AS(make_automorphism(2, CAT, 0.6), LabError);
}

TEST_CASE("stepping: exact small orbits") {
  auto sys = cat_map();

  TorusPoint origin(0.0, 0.0);
  CHECK(step(sys, origin, 5).coords == origin.coords);

  // (1/2,1/2) -> (3/2,1) -> (1/2,0): exact in binary floating point.
  TorusPoint h(0.5, 0.5);
  TorusPoint h1 = step(sys, h, 1);
  CHECK(h1.coords[0] == 0.5);
  CHECK(h1.coords[1] == 0.0);
  TorusPoint back = step(sys, h1, -1);
  CHECK(back.coords[0] == 0.5);
  CHECK(back.coords[1] == 0.5);

  // The half-integer points form a 3-cycle together with (0,1/2).
  TorusPoint h2 = step(sys, h, 3);
  CHECK(h2.coords == h.coords);
}

TEST_CASE("stepping composes") {
  auto sys = cat_map();
  TorusPoint x(0.217, 0.643);
  TorusPoint a = step(sys, step(sys, x, 4), 3);
  TorusPoint b = step(sys, x, 7);
  CHECK(torus_distance(a, b) < 1e-13);
  TorusPoint c = step(sys, step(sys, x, 2), -2);
  CHECK(torus_distance(c, x) < 1e-12);
}

TEST_CASE("leaf geometry: contraction and expansion at the exact rates") {
  auto sys = cat_map();
  TorusPoint x(0.3, 0.7);
  const double t = 0.01;

  // Rounding errors in the iterated doubles grow like nu_hat^n, so the
  // clean geometric decay is only observable until noise ~ signal (n ~ 12
  // for t = 0.01); past that horizon the check would test the arithmetic,
  // not the geometry.
  auto noise = [&](int n) { return std::pow(sys.nu_hat(), n) * 1e-14; };

  LeafSelector sel;  // stable, index 0
  TorusPoint y = leaf_point(sys, x, sel, t);
  CHECK(torus_distance(x, y) == doctest::Approx(t).epsilon(1e-10));
  for (int n = 1; n <= 10; ++n) {
    double d = torus_distance(step(sys, x, n), step(sys, y, n));
    CHECK(d <= std::pow(sys.nu(), n) * t * (1.0 + 1e-7) + noise(n));
  }

  LeafSelector usel{LeafSelector::unstable, 0};
  const double tu = 1e-4;  // small enough that 8 doublings stay unwrapped
  TorusPoint zu = leaf_point(sys, x, usel, tu);
  for (int n = 1; n <= 8; ++n) {
    double d = torus_distance(step(sys, x, n), step(sys, zu, n));
    CHECK(d == doctest::Approx(std::pow(sys.nu_hat(), n) * tu).epsilon(1e-7));
  }
  TorusPoint z = leaf_point(sys, x, usel, t);
  // ... and the unstable leaf contracts under backward iteration.
  for (int n = 1; n <= 10; ++n) {
    double d = torus_distance(step(sys, x, -n), step(sys, z, -n));
    CHECK(d <= std::pow(sys.nu_hat(), -n) * t * (1.0 + 1e-7) + noise(n));
  }

  TorusPoint round = leaf_point(sys, y, sel, -t);
  CHECK(torus_distance(round, x) < 1e-12);

  CHECK_THROWS_AS(leaf_point(sys, x, sel, 0.41), LabError);
  try {
    leaf_point(sys, x, sel, -0.41);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::leaf_radius_exceeded);
  }
}

TEST_CASE("torus distance wraps") {
  TorusPoint a(0.9, 0.0), b(0.1, 0.0);
  CHECK(torus_distance(a, b) == doctest::Approx(0.2));
  TorusPoint c(0.95, 0.95), d(0.05, 0.05);
  CHECK(torus_distance(c, d) == doctest::Approx(std::sqrt(0.02)));
}

TEST_CASE("rational orbit arithmetic is exactly periodic") {
  auto sys = cat_map();
  IVec p(2);
  p << 1, 1;  // (1/7, 1/7)

  // Hand-checked orbit of numerators mod 7.
  const long long orbit[8][2] = {{1, 1}, {3, 2}, {1, 5}, {0, 6},
                                 {6, 6}, {4, 5}, {6, 2}, {0, 1}};
  IVec v = p;
  for (int k = 1; k <= 8; ++k) {
    v = step_rational(sys, v, 7, 1);
    CHECK(v[0] == orbit[k % 8][0]);
    CHECK(v[1] == orbit[k % 8][1]);
  }
  CHECK(step_rational(sys, p, 7, 8) == p);
  CHECK(step_rational(sys, p, 7, -3) == step_rational(sys, p, 7, 5));

  // Doubles lose this orbit; the exact path is the point of step_rational.
  TorusPoint xd(1.0 / 7.0, 1.0 / 7.0);
  TorusPoint far = step(sys, xd, 200);
  IVec exact = step_rational(sys, p, 7, 200);
  TorusPoint xe(exact[0] / 7.0, exact[1] / 7.0);
  WARN(torus_distance(far, xe) > 1e-3);  // documents the drift, not a contract
}

TEST_CASE("a 3-d automorphism with a complex stable pair") {
  // Companion matrix of t^3 - t^2 - 1: one real expanding eigenvalue,
  // a complex contracting pair, nothing on the unit circle.
  const long long M[9] = {0, 0, 1, 1, 0, 0, 0, 1, 1};
  auto sys = make_automorphism(3, M);

  // Independent oracle: Newton's method on the characteristic polynomial.
  double r = 1.5;
  for (int i = 0; i < 60; ++i)
    r -= (r * r * r - r * r - 1.0) / (3.0 * r * r - 2.0 * r);
  CHECK(sys.nu_hat() == doctest::Approx(r).epsilon(1e-12));
  CHECK(sys.nu() == doctest::Approx(1.0 / std::sqrt(r)).epsilon(1e-12));

  CHECK(sys.stable_basis().cols() == 2);
  CHECK(sys.unstable_basis().cols() == 1);
  CHECK(sys.leaf_directions(LeafSelector::stable).empty());
  REQUIRE(sys.leaf_directions(LeafSelector::unstable).size() == 1);

  // Orthonormality of the subspace bases.
  Mat g = sys.stable_basis().transpose() * sys.stable_basis();
  CHECK((g - Mat::Identity(2, 2)).norm() < 1e-12);

  // The stable subspace is L-invariant.
  Mat img = sys.matrix().cast<double>() * sys.stable_basis();
  Mat proj = sys.stable_basis() * (sys.stable_basis().transpose() * img);
  CHECK((img - proj).norm() < 1e-10);

  LeafSelector missing{LeafSelector::stable, 0};
  TorusPoint x(Vec::Constant(3, 0.25));
  CHECK_THROWS_AS(leaf_point(sys, x, missing, 0.1), LabError);
}

TEST_CASE("inverse system swaps the rates") {
  auto sys = cat_map();
  auto inv = sys.inverse();
  CHECK(inv.nu() == doctest::Approx(1.0 / sys.nu_hat()).epsilon(1e-12));
  CHECK(inv.nu_hat() == doctest::Approx(1.0 / sys.nu()).epsilon(1e-12));
  CHECK(inv.matrix() == sys.matrix_inverse());

  TorusPoint x(0.123, 0.456);
  CHECK(torus_distance(step(inv, x, 1), step(sys, x, -1)) == 0.0);
}

TEST_CASE("sample stream: deterministic, decorrelated, in range") {
  SampleStream s1(42), s2(42), s3(43);
  for (uint64_t i = 0; i < 100; ++i) {
    double u = s1.uniform(i, 0);
    CHECK(u == s2.uniform(i, 0));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u != s3.uniform(i, 0));
    CHECK(u != s1.uniform(i, 1));
  }
  double lo = s1.uniform(7, 0, -2.0, -1.0);
  CHECK(lo >= -2.0);
  CHECK(lo < -1.0);
}

TEST_CASE("pushforward of uniform samples stays uniform (chi-square)") {
  auto sys = cat_map();
  SampleStream rng(2026);
  const int kCells = 10, kPoints = 100000;
  std::vector<int> counts(kCells * kCells, 0);
  for (int i = 0; i < kPoints; ++i) {
    TorusPoint x(rng.uniform(i, 0), rng.uniform(i, 1));
    TorusPoint y = step(sys, x, 1);
    int cx = std::min(kCells - 1, static_cast<int>(y.coords[0] * kCells));
    int cy = std::min(kCells - 1, static_cast<int>(y.coords[1] * kCells));
    ++counts[cx * kCells + cy];
  }
  const double expected = static_cast<double>(kPoints) / (kCells * kCells);
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.999 quantile of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 148.3);
}
