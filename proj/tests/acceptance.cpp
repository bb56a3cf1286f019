// Acceptance gate: eight desk-scale criteria, one pass/fail line each.
// Tolerances and runtime budgets are pinned here, not configurable; the
// binary exits nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "clab/conjugacy.hpp"
#include "clab/errors.hpp"
#include "clab/holonomy.hpp"
#include "clab/report.hpp"
#include "clab/rng.hpp"
#include "clab/scenario.hpp"

using namespace clab;

namespace {

constexpr uint64_t kSeed = 20260815;

std::shared_ptr<const HyperbolicAutomorphism> cat_base() {
  static const long long cat[4] = {2, 1, 1, 1};
  static auto sys = std::make_shared<const HyperbolicAutomorphism>(
      make_automorphism(2, cat));
  return sys;
}

Mat rot2(double th) {
  Mat m(2, 2);
  m << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return m;
}

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

FieldTerm mode(int d, const std::vector<double>& P,
               const std::vector<double>& Q, long long k1, long long k2,
               double scale) {
  FieldTerm t;
  t.k = IVec(2);
  t.k << k1, k2;
  t.P = Mat::Zero(d, d);
  t.Q = Mat::Zero(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      t.P(r, c) = scale * P[static_cast<size_t>(r * d + c)];
      t.Q(r, c) = scale * Q[static_cast<size_t>(r * d + c)];
    }
  return t;
}

const PropertyRow& find_row(const std::vector<PropertyRow>& rows,
                            const std::string& name) {
  for (const auto& r : rows)
    if (r.property == name) return r;
  throw LabError(ErrorCode::internal, "missing property row " + name);
}

struct Criterion {
  bool pass = true;
  std::ostringstream detail;

  // Records one comparison; the printed detail keeps measured vs pinned.
  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [FAILED]");
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool run_criterion(int index, const std::string& name, double budget_seconds,
                   const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (budget_seconds > 0)
    c.expect(elapsed < budget_seconds, "runtime " + fmt(elapsed) + "s < " +
                                           fmt(budget_seconds) + "s");
  std::printf("AC%d %-16s %s (%.2fs) — %s\n", index, name.c_str(),
              c.pass ? "PASS" : "FAIL", elapsed, c.detail.str().c_str());
  std::fflush(stdout);
  return c.pass;
}

// The stock near-identity analytic cocycle: identity constant factor with
// two 0.15-scale Fourier modes, fiber bunched over the cat map.
Cocycle near_identity_cocycle() {
  const FieldTerm t1 = mode(2, {0.4, -0.2, 0.3, 0.1}, {0.1, 0.5, -0.3, 0.2},
                            1, 0, 0.15);
  const FieldTerm t2 = mode(2, {-0.3, 0.2, 0.1, 0.4}, {0.2, -0.1, 0.4, 0.3},
                            0, 1, 0.15);
  return make_cocycle(cat_base(), make_matrix_field(Mat::Identity(2, 2),
                                                    {t1, t2}));
}

// Constant-rotation twist plus an analytic pair (eta, phi) satisfying
// phi = eta - F^{-1} eta(f.) by construction: each eta mode at frequency k
// contributes its own mode and a shifted mode at L^T k with -R^{-1} factors.
struct TwistData {
  Cocycle twist;
  VectorField eta;
  VectorField phi;
};

TwistData make_twist_data() {
  const Mat R = rot2(0.7);
  const Mat Rinv = R.transpose();
  Vec c0(2);
  c0 << 0.05, -0.1;
  std::vector<VectorTerm> eta_terms(2);
  eta_terms[0].k = IVec(2);
  eta_terms[0].k << 1, 0;
  eta_terms[0].p = Vec(2);
  eta_terms[0].p << 0.3, -0.2;
  eta_terms[0].q = Vec(2);
  eta_terms[0].q << 0.1, 0.25;
  eta_terms[1].k = IVec(2);
  eta_terms[1].k << 1, 1;
  eta_terms[1].p = Vec(2);
  eta_terms[1].p << -0.15, 0.1;
  eta_terms[1].q = Vec(2);
  eta_terms[1].q << 0.2, 0.05;

  const IMat Lt = cat_base()->matrix().transpose();
  std::vector<VectorTerm> phi_terms;
  for (const auto& t : eta_terms) {
    phi_terms.push_back(t);
    VectorTerm s;
    s.k = Lt * t.k;
    s.p = -(Rinv * t.p);
    s.q = -(Rinv * t.q);
    phi_terms.push_back(s);
  }
  return {make_cocycle(cat_base(), constant_field(R)),
          make_vector_field(c0, eta_terms, 2),
          make_vector_field(c0 - Rinv * c0, phi_terms, 2)};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double check_value(const std::string& csv_path, const std::string& check,
                   int column) {
  const auto rows = parse_csv(read_file(csv_path));
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i][0] == check) return std::stod(rows[i][static_cast<size_t>(column)]);
  throw LabError(ErrorCode::internal, "no check row " + check);
}

// --- the eight criteria -----------------------------------------------------

void ac1_holonomy_suite(Criterion& c) {
  const Cocycle coc = near_identity_cocycle();
  const auto rows = holonomy_property_suite(coc, 50, 1e-10, kSeed);
  const auto& h2 = find_row(rows, "H2-composition");
  const auto& h3 = find_row(rows, "H3-equivariance");
  const auto& h4 = find_row(rows, "H4-holder");
  c.expect(h2.max_residual < 1e-8,
           "H2 composition " + fmt(h2.max_residual) + " < 1e-8");
  c.expect(h3.max_residual < 1e-8 && h3.n_max <= 5,
           "H3 equivariance (n<=5) " + fmt(h3.max_residual) + " < 1e-8");
  c.expect(h4.fitted_slope >= 0.9,
           "H4 slope " + fmt(h4.fitted_slope) + " >= 0.9");
}

void ac2_twisted_solver(Criterion& c) {
  const TwistData td = make_twist_data();
  const SampleStream rng(kSeed);
  double eq_res = 0.0;
  for (int i = 0; i < 30; ++i) {
    Vec xv(2);
    xv << rng.uniform(i, 0), rng.uniform(i, 1);
    const TorusPoint x{xv};
    const TorusPoint fx = step(*cat_base(), x, 1);
    eq_res = std::max(eq_res, (evaluate(td.phi, x) - evaluate(td.eta, x) +
                               td.twist.generator_inverse(x) *
                                   evaluate(td.eta, fx))
                                  .norm());
  }
  c.expect(eq_res < 1e-9, "twisted equation " + fmt(eq_res) + " < 1e-9");

  const auto rows = twisted_invariance_residual(
      td.twist, td.phi,
      [&td](const TorusPoint& p) { return evaluate(td.eta, p); }, 30, 1e-10,
      kSeed);
  const auto& inv = find_row(rows, "twisted-invariance");
  c.expect(inv.max_residual < 1e-8,
           "transport invariance " + fmt(inv.max_residual) + " < 1e-8");
}

void ac3_one_exponent(Criterion& c) {
  Mat a0 = Mat::Zero(3, 3);
  a0.topLeftCorner(2, 2) = rot2(0.7);
  a0(2, 2) = 1.0;
  a0 *= 1.05;
  const Cocycle a_coc = make_cocycle(cat_base(), TrigPolyMat::constant(a0, 2));

  // Known analytic conjugacy: identity plus strictly upper-triangular
  // Fourier modes (unipotent pointwise, so its closed-form inverse exists).
  const FieldTerm m1 = mode(3,
                            {0, 0.3, 0, 0, 0, 0.2, 0, 0, 0},
                            {0, 0, 0.15, 0, 0, 0, 0, 0, 0}, 1, 0, 1.0);
  const FieldTerm m2 = mode(3,
                            {0, 0.1, 0.25, 0, 0, 0, 0, 0, 0},
                            {0, 0, 0.3, 0, 0, 0.12, 0, 0, 0}, 0, 1, 1.0);
  const TrigPolyMat c0 =
      TrigPolyMat::from_real_terms(Mat::Identity(3, 3), {m1, m2}, 2);
  const Cocycle b_coc = conjugated_cocycle(a_coc, c0);

  const auto [flag, rho] = jordan_flag(a0);
  c.expect(flag.depth() == 1 && std::abs(rho - 1.05) < 1e-12,
           "single modulus group, rho " + fmt(rho));

  const ConjugacySection sec = inductive_block_solve(
      a_coc, b_coc, flag, flag, {section_from_poly(c0)}, 1e-10);
  const PropertyRow conj = conjugacy_residual(a_coc, b_coc, sec, 40, kSeed);
  c.expect(conj.max_residual < 1e-8,
           "conjugacy residual " + fmt(conj.max_residual) + " < 1e-8");
  const PropertyRow twine =
      intertwining_residual(a_coc, b_coc, sec, 8, 1e-10, kSeed + 1);
  c.expect(twine.max_residual < 1e-7,
           "intertwining residual " + fmt(twine.max_residual) + " < 1e-7");

  const HolderEstimate he = holder_exponent_estimate(
      sec.eval, *cat_base(), LeafSelector{LeafSelector::stable, 0}, 24,
      {0.3, 0.15, 0.08, 0.04, 0.02, 0.01, 0.005, 0.003}, kSeed + 2);
  c.expect(he.beta_hat >= 0.9, "Holder slope " + fmt(he.beta_hat) + " >= 0.9");
}

void ac4_perturbation(Criterion& c) {
  const Mat a0 = diag2(2.0, 0.5);
  const FieldTerm t1 = mode(2, {0.5, 0.8, -0.6, 0.3}, {0.1, -0.5, 0.3, 0.6},
                            1, 0, 0.01);
  const FieldTerm t2 = mode(2, {-0.4, 0.2, 0.5, -0.1}, {0.2, 0.4, -0.3, 0.1},
                            0, 1, 0.01);
  const Cocycle b_coc =
      make_cocycle(cat_base(), make_matrix_field(a0, {t1, t2}));

  const SplittingReport rep = invariant_splitting(b_coc, a0, 40, 12, kSeed);
  c.expect(rep.max_axis_distance < 0.1,
           "splitting angle " + fmt(rep.max_axis_distance) + " < 0.1");
  // Groups ascend in modulus: index 0 is the 1/2 block, index 1 the 2 block.
  const double e0 = rep.block_exponents[0], e1 = rep.block_exponents[1];
  c.expect(std::abs(e0 + std::log(2.0)) <= 0.02,
           "contracting exponent " + fmt(e0) + " = -ln2 +- 0.02");
  c.expect(std::abs(e1 - std::log(2.0)) <= 0.02,
           "expanding exponent " + fmt(e1) + " = ln2 +- 0.02");
}

void ac5_pw_divergence(Criterion& c) {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = "acceptance_out/pw";
  const ScenarioResult res = run_scenario("pw-demo", cfg, true);
  c.expect(res.exit_code == 0, "scenario exit 0");
  const std::string checks = cfg.out_dir + "/pw-demo_checks.csv";
  const double fraction = check_value(checks, "converged_fraction", 3);
  const double ratio = check_value(checks, "sup_growth_ratio", 3);
  c.expect(fraction >= 0.95,
           "converged fraction(1000 pts, tol 1e-6, n=400) " + fmt(fraction) +
               " >= 0.95");
  c.expect(ratio >= 2.0, "sup(400)/sup(200) " + fmt(ratio) + " >= 2");
}

void ac6_growth_certificates(Criterion& c) {
  const Cocycle mild = make_cocycle(
      cat_base(), TrigPolyMat::constant(diag2(1.1, 1.0 / 1.1), 2));
  const GrowthReport ok =
      growth_report(mild, GrowthKind::fiber_bunching, 1.0, 64, 5, kSeed);
  c.expect(ok.verdict == Verdict::pass && ok.theta_hat < 0.5,
           "diag(1.1,1/1.1) bunched, theta " + fmt(ok.theta_hat) + " < 0.5");

  const Cocycle steep =
      make_cocycle(cat_base(), TrigPolyMat::constant(diag2(2.0, 0.5), 2));
  const GrowthReport bad =
      growth_report(steep, GrowthKind::fiber_bunching, 1.0, 64, 5, kSeed);
  c.expect(bad.verdict == Verdict::fail && bad.theta_hat > 1.5,
           "diag(2,1/2) not bunched, theta " + fmt(bad.theta_hat) + " > 1.5");

  Mat j(2, 2);
  j << 1, 1, 0, 1;
  const Cocycle jord = make_cocycle(cat_base(), TrigPolyMat::constant(j, 2));
  const auto [deg, r2] =
      polynomial_growth_degree(jord, constant_field(Mat::Identity(1, 1)), 64);
  c.expect(std::abs(deg - 1.0) <= 0.05,
           "Jordan growth degree " + fmt(deg) + " = 1 +- 0.05");
}

void ac7_lyapunov(Criterion& c) {
  const Cocycle coc =
      make_cocycle(cat_base(), TrigPolyMat::constant(diag2(2.0, 0.5), 2));
  const TorusPoint x(0.31, 0.62);
  const std::vector<double> spec = lyapunov_spectrum(coc, x, 10000);
  c.expect(std::abs(spec[0] - std::log(2.0)) < 1e-6 &&
               std::abs(spec[1] + std::log(2.0)) < 1e-6,
           "spectrum (" + fmt(spec[0]) + ", " + fmt(spec[1]) +
               ") = (ln2, -ln2) +- 1e-6");

  // Fixed seeded random constant conjugation must leave the spectrum alone.
  const SampleStream rng(kSeed + 9);
  Mat h(2, 2);
  h << rng.uniform(0, 0, -1, 1), rng.uniform(0, 1, -1, 1),
      rng.uniform(1, 0, -1, 1), rng.uniform(1, 1, -1, 1);
  if (std::abs(h.determinant()) < 0.3) h += 0.7 * Mat::Identity(2, 2);
  const Cocycle conj = conjugated_cocycle(coc, TrigPolyMat::constant(h, 2));
  const std::vector<double> spec2 = lyapunov_spectrum(conj, x, 10000);
  const double drift = std::max(std::abs(spec2[0] - spec[0]),
                                std::abs(spec2[1] - spec[1]));
  c.expect(drift < 1e-6, "conjugation drift " + fmt(drift) + " < 1e-6");
}

void ac8_determinism(Criterion& c) {
  for (const std::string name : {"twist-verify", "holonomy-verify"}) {
    ScenarioConfig cfg = default_scenario_config();
    cfg.out_dir = "acceptance_out/det_a/" + name;
    const ScenarioResult first = run_scenario(name, cfg, true);
    std::vector<std::string> bytes;
    for (const auto& p : first.csv_paths) bytes.push_back(read_file(p));
    const std::string manifest = read_file(cfg.out_dir + "/manifest.csv");

    // Same directory rerun, then a fresh directory, both byte-compared.
    const ScenarioResult again = run_scenario(name, cfg, true);
    bool same = read_file(cfg.out_dir + "/manifest.csv") == manifest;
    for (size_t i = 0; i < again.csv_paths.size(); ++i)
      same = same && read_file(again.csv_paths[i]) == bytes[i];

    ScenarioConfig fresh = cfg;
    fresh.out_dir = "acceptance_out/det_b/" + name;
    const ScenarioResult other = run_scenario(name, fresh, true);
    for (size_t i = 0; i < other.csv_paths.size(); ++i)
      same = same && read_file(other.csv_paths[i]) == bytes[i];

    c.expect(same, name + " reruns byte-identical");
  }
}

}  // namespace

int main() {
  int failed = 0;
  failed += !run_criterion(1, "holonomy-suite", 10.0, ac1_holonomy_suite);
  failed += !run_criterion(2, "twisted-solver", 10.0, ac2_twisted_solver);
  failed += !run_criterion(3, "one-exponent", 60.0, ac3_one_exponent);
  failed += !run_criterion(4, "perturbation", 30.0, ac4_perturbation);
  failed += !run_criterion(5, "pw-divergence", 30.0, ac5_pw_divergence);
  failed += !run_criterion(6, "growth-certs", 10.0, ac6_growth_certificates);
  failed += !run_criterion(7, "lyapunov", 0.0, ac7_lyapunov);
  failed += !run_criterion(8, "determinism", 0.0, ac8_determinism);
  std::printf("ACCEPTANCE: %d/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
