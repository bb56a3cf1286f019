#include "clab/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "clab/conjugacy.hpp"
#include "clab/errors.hpp"
#include "clab/holonomy.hpp"
#include "clab/rng.hpp"
#include "json.hpp"

namespace clab {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 6.283185307179586476925286766559;

[[noreturn]] void config_fail(const std::string& path, const std::string& why) {
  throw LabError(ErrorCode::config_error, path + ": " + why);
}

TorusPoint sample_point(const SampleStream& rng, uint64_t index, int dim) {
  Vec c(dim);
  for (int j = 0; j < dim; ++j) c[j] = rng.uniform(index, j);
  return TorusPoint{c};
}

Mat rot2(double th) {
  Mat m(2, 2);
  m << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return m;
}

// One Fourier mode amplitude*trig(2 pi k.x) at entry (r,c) of a d x d field.
FieldTerm entry_mode(int d, int r, int c, long long k1, long long k2,
                     double cos_amp, double sin_amp) {
  FieldTerm t;
  t.k = IVec(2);
  t.k << k1, k2;
  t.P = Mat::Zero(d, d);
  t.Q = Mat::Zero(d, d);
  t.P(r, c) = cos_amp;
  t.Q(r, c) = sin_amp;
  return t;
}

// Scenario working state: accumulates check rows and written artifacts, and
// remembers the first failing check for the CLI's exit message.
struct Ctx {
  const ScenarioConfig& cfg;
  std::string name;
  std::shared_ptr<const HyperbolicAutomorphism> sys;
  std::vector<CheckRow> checks;
  std::vector<std::string> csv_paths;
  std::string failing;

  void check(const std::string& label, int samples, double residual,
             double rate, bool pass) {
    checks.push_back({label, samples, residual, rate,
                      pass ? Verdict::pass : Verdict::fail});
    if (!pass && failing.empty()) failing = label;
  }
  void check_row(const CheckRow& row) {
    checks.push_back(row);
    if (row.verdict != Verdict::pass && failing.empty()) failing = row.check;
  }
  void fold_properties(const std::vector<PropertyRow>& rows) {
    for (const auto& r : rows)
      if (r.verdict != Verdict::pass && failing.empty()) failing = r.property;
  }
  void emit(const std::string& artifact, const CsvTable& t) {
    const std::string path =
        cfg.out_dir + "/" + name + "_" + artifact + ".csv";
    write_file(path, to_csv(t));
    csv_paths.push_back(path);
  }
};

CheckRow property_as_check(const PropertyRow& r) {
  return {r.property, r.samples, r.max_residual, r.fitted_slope, r.verdict};
}

// ---------------------------------------------------------------------------
// pw-demo
//
// The 2x2 upper-triangular family over the cat map,
//   A(x) = [[a(x), b(x)], [0, 1]],  a(x) = exp(alpha + eps cos 2pi x1),
// with alpha = -0.2, eps = 1: log a has negative mean and positive maximum,
// the regime where the conjugacy equation is solvable at almost every point
// but not continuously. Writing C = [[1, c], [0, 1]] turns B = C(fx) A C^{-1}
// with B = diag(a, 1) into the scalar equation b(x) = a(x) c(x) - c(fx),
// whose backward substitution c(x) = a(f^{-1}x) c(f^{-1}x) - b(f^{-1}x)
// telescopes to
//   c(x) = -sum_{k>=1} T_{k-1}(x) b(f^{-k}x),  T_k(x) = prod_{j<=k} a(f^{-j}x).
// Birkhoff: log T_k ~ alpha k < 0 at a.e. x, so the series converges almost
// everywhere; on any periodic orbit where log a sums positive it diverges
// geometrically, which is the obstruction to a continuous solution.
// ---------------------------------------------------------------------------
void scenario_pw_demo(Ctx& c) {
  const auto& sys = *c.sys;
  require(sys.dim() == 2, ErrorCode::config_error,
          "base_matrix: pw-demo is specified over a 2-torus base");
  const double alpha = -0.2, eps = 1.0;
  auto a = [alpha, eps](double x1) {
    return std::exp(alpha + eps * std::cos(kTwoPi * x1));
  };
  auto b = [](double x1) { return std::sin(kTwoPi * x1); };

  const int n_points = c.cfg.count("points", 1000);
  const int n_max = c.cfg.horizon("partial_sums", 400);
  const double tol = c.cfg.tol("convergence", 1e-6);
  require(n_max >= 8, ErrorCode::config_error, "n_max.partial_sums: too small");

  // The mean of log a by seeded Monte Carlo; exact value is alpha since the
  // cosine integrates to zero.
  const SampleStream rng(c.cfg.seed);
  double mc_acc = 0.0;
  const int mc_n = c.cfg.count("monte_carlo", 4000);
  for (int i = 0; i < mc_n; ++i)
    mc_acc += std::log(a(rng.uniform(0x517ed00bULL + i, 0)));
  const double mean_log_a = mc_acc / mc_n;
  c.check("log_mean_negative", mc_n, std::abs(mean_log_a - alpha), mean_log_a,
          mean_log_a < 0.0);

  // Sample set: seeded uniform points plus every point of the exact rational
  // period-8 orbit of (1/7, 1/7). Backward orbits of the uniform points are
  // taken in doubles (pseudo-orbits represent typical points); the probes
  // advance their numerators with exact integer arithmetic mod 7 because a
  // double orbit drifts off the periodic cycle after ~40 steps and the
  // divergence the probes witness would falsely saturate.
  struct PointRecord {
    std::string kind;
    bool converged = false;
    double tail_osc = 0.0;
    double final_value = 0.0;
  };
  std::vector<PointRecord> records;
  std::vector<double> sup_abs(static_cast<size_t>(n_max) + 1, 0.0);

  auto run_point = [&](const std::function<TorusPoint(int)>& backward_orbit,
                       const std::string& kind) {
    // backward_orbit(k) = f^{-k} x for k >= 1.
    std::vector<double> partial(static_cast<size_t>(n_max) + 1, 0.0);
    double T = 1.0, sum = 0.0;
    for (int k = 1; k <= n_max; ++k) {
      const double x1 = backward_orbit(k).coords[0];
      sum -= T * b(x1);
      T *= a(x1);
      partial[k] = sum;
    }
    PointRecord rec;
    rec.kind = kind;
    rec.final_value = partial[n_max];
    for (int k = n_max / 2; k <= n_max; ++k)
      rec.tail_osc =
          std::max(rec.tail_osc, std::abs(partial[k] - partial[n_max]));
    rec.converged = rec.tail_osc < tol;
    records.push_back(rec);
    for (int k = 1; k <= n_max; ++k)
      sup_abs[k] = std::max(sup_abs[k], std::abs(partial[k]));
  };

  for (int i = 0; i < n_points; ++i) {
    TorusPoint y = sample_point(rng, i, 2);
    run_point(
        [&](int) {
          y = step(sys, y, -1);
          return y;
        },
        "uniform");
  }
  {
    IVec start(2);
    start << 1, 1;  // the (1/7, 1/7) orbit
    for (int p = 0; p < 8; ++p) {
      IVec nums = step_rational(sys, start, 7, p);
      run_point(
          [&, nums](int) mutable {
            nums = step_rational(sys, nums, 7, -1);
            return TorusPoint(static_cast<double>(nums[0]) / 7.0,
                              static_cast<double>(nums[1]) / 7.0);
          },
          "probe");
    }
  }

  // Convergence fraction over the random sample only: the probes are
  // constructed witnesses of the measure-zero divergence set and get their
  // own check (all eight must diverge).
  int converged = 0, probe_converged = 0, probe_count = 0;
  for (const auto& r : records) {
    if (r.kind == "probe") {
      ++probe_count;
      probe_converged += r.converged ? 1 : 0;
    } else {
      converged += r.converged ? 1 : 0;
    }
  }
  const double fraction =
      static_cast<double>(converged) / static_cast<double>(n_points);
  c.check("converged_fraction", n_points, 1.0 - fraction, fraction,
          fraction >= 0.95);
  c.check("probe_divergence", probe_count,
          static_cast<double>(probe_converged), 0.0, probe_converged == 0);

  const double sup_half = sup_abs[n_max / 2];
  const double ratio = sup_half > 0 ? sup_abs[n_max] / sup_half
                                    : std::numeric_limits<double>::infinity();
  c.check("sup_growth_ratio", static_cast<int>(records.size()), 0.0, ratio,
          ratio >= 2.0);

  CsvTable pts;
  pts.header = {"index", "kind", "converged", "tail_oscillation",
                "value_at_n_max"};
  for (size_t i = 0; i < records.size(); ++i)
    pts.rows.push_back({std::to_string(i), records[i].kind,
                        records[i].converged ? "1" : "0",
                        format_number(records[i].tail_osc),
                        format_number(records[i].final_value)});
  c.emit("points", pts);

  CsvTable curve;
  curve.header = {"n", "sup_abs_partial_sum"};
  const int stride = std::max(1, n_max / 40);
  for (int k = stride; k <= n_max; k += stride)
    curve.rows.push_back({std::to_string(k), format_number(sup_abs[k])});
  c.emit("sup_curve", curve);
}

// ---------------------------------------------------------------------------
// one-exponent
//
// Constant A = 1.05 * (rotation ⊕ Jordan block) on R^4: one eigenvalue
// modulus, mixed semisimple/unipotent structure, flag of dimensions {3, 4}.
// B conjugates A by an analytic section that is the identity on the flag's
// diagonal blocks, so the off-diagonal block is exactly what the inductive
// solver has to reconstruct; residuals and the Holder slope of the solved
// section are measured on fresh samples.
// ---------------------------------------------------------------------------
void scenario_one_exponent(Ctx& c) {
  require(c.sys->dim() == 2, ErrorCode::config_error,
          "base_matrix: one-exponent is specified over a 2-torus base");
  const double rho = 1.05;
  Mat a0 = Mat::Zero(4, 4);
  a0.topLeftCorner(2, 2) = rot2(0.7);
  a0.bottomRightCorner(2, 2) << 1, 1, 0, 1;
  a0 *= rho;
  const Cocycle a_coc = make_cocycle(c.sys, TrigPolyMat::constant(a0, 2));

  const TrigPolyMat c0 = TrigPolyMat::from_real_terms(
      Mat::Identity(4, 4),
      {entry_mode(4, 0, 3, 1, 0, 0.3, 0.0), entry_mode(4, 1, 3, 0, 1, 0.0, 0.2),
       entry_mode(4, 2, 3, 1, 1, 0.15, 0.0)},
      2);
  const Cocycle b_coc = conjugated_cocycle(a_coc, c0);

  const auto [flag, measured_rho] = jordan_flag(a0);
  c.check("jordan_flag_depth", flag.depth(), std::abs(measured_rho - rho),
          measured_rho, flag.depth() == 2);

  const BlockDecomposition dec_a = block_decompose(a_coc, flag);
  const BlockDecomposition dec_b = block_decompose(b_coc, flag);
  c.check("block_triangularity", 16,
          std::max(dec_a.triangularity_residual, dec_b.triangularity_residual),
          0.0,
          std::max(dec_a.triangularity_residual,
                   dec_b.triangularity_residual) < 1e-9);

  std::vector<ConjugacySection> diagonal;
  for (int j = 0; j < flag.depth(); ++j)
    diagonal.push_back(section_from_poly(
        TrigPolyMat::identity(dec_a.block_dim(j), c.sys->dim())));

  const double solve_tol = c.cfg.tol("solve", 1e-10);
  const ConjugacySection sec =
      inductive_block_solve(a_coc, b_coc, flag, flag, diagonal, solve_tol);
  c.check("block_solve_residual:" + sec.route, 3, sec.solve_residual, 0.0,
          sec.solve_residual < 10.0 * solve_tol);

  const PropertyRow conj = conjugacy_residual(
      a_coc, b_coc, sec, c.cfg.count("conjugacy", 40), c.cfg.seed);
  c.check("conjugacy_residual", conj.samples, conj.max_residual, 0.0,
          conj.max_residual < c.cfg.tol("conjugacy", 1e-8));

  const PropertyRow twine =
      intertwining_residual(a_coc, b_coc, sec, c.cfg.count("intertwining", 8),
                            c.cfg.tol("holonomy", 1e-10), c.cfg.seed + 1);
  c.check("intertwining_residual", twine.samples, twine.max_residual, 0.0,
          twine.max_residual < c.cfg.tol("intertwining", 1e-7));

  const std::vector<double> scales = {0.3,  0.15, 0.08,  0.04,
                                      0.02, 0.01, 0.005, 0.003};
  const HolderEstimate holder = holder_exponent_estimate(
      sec.eval, *c.sys, LeafSelector{LeafSelector::stable, 0},
      c.cfg.count("holder", 24), scales, c.cfg.seed + 2);
  c.check("holder_slope", holder.used_scales, 1.0 - holder.r_squared,
          holder.beta_hat, holder.beta_hat >= 0.9 * c.cfg.beta);
}

// ---------------------------------------------------------------------------
// perturbation
//
// Constant A = diag(2, 1/2) ⊕ rotation, perturbed multiplicatively by a 1%
// analytic field. The splitting of the perturbed cocycle is recovered from
// finite products, compared with the reference axes, and its per-block
// exponents against log of the reference moduli. Each recovered block is
// then run through the one-exponent machinery: flag of the reference block
// and an invariant metric for the rescaled restriction.
// ---------------------------------------------------------------------------
void scenario_perturbation(Ctx& c) {
  require(c.sys->dim() == 2, ErrorCode::config_error,
          "base_matrix: perturbation is specified over a 2-torus base");
  Mat a0 = Mat::Zero(4, 4);
  a0(0, 0) = 2.0;
  a0(1, 1) = 0.5;
  a0.bottomRightCorner(2, 2) = rot2(0.7);

  FieldTerm t1, t2;
  t1.k = IVec(2);
  t1.k << 1, 0;
  t1.P.setZero(4, 4);
  t1.Q.setZero(4, 4);
  t1.P << 0.5, 0.8, -0.6, 0.3, 0.2, -0.4, 0.7, 0.1, -0.3, 0.5, 0.4, -0.2, 0.6,
      0.1, -0.2, 0.4;
  t1.Q << 0.1, -0.5, 0.3, 0.6, -0.2, 0.4, 0.1, -0.3, 0.5, 0.2, -0.6, 0.1, 0.3,
      -0.1, 0.2, 0.5;
  t1.P *= 0.01;
  t1.Q *= 0.01;
  t2.k = IVec(2);
  t2.k << 0, 1;
  t2.P.setZero(4, 4);
  t2.Q.setZero(4, 4);
  t2.P << -0.4, 0.2, 0.5, -0.1, 0.3, 0.6, -0.2, 0.4, 0.1, -0.3, 0.2, 0.5, -0.5,
      0.4, 0.1, 0.3;
  t2.Q << 0.2, 0.4, -0.3, 0.1, 0.5, -0.1, 0.4, 0.2, -0.2, 0.3, 0.1, -0.4, 0.4,
      0.2, -0.5, 0.1;
  t2.P *= 0.01;
  t2.Q *= 0.01;
  const Cocycle b_coc = make_cocycle(c.sys, make_matrix_field(a0, {t1, t2}));

  // Product length balances truncation against roundoff: the subbundle
  // estimate converges like gap^{-n} while the interior singular subspaces
  // of a product with sigma-ratio gap^n lose eps*gap^n to rounding, so the
  // sweet spot sits near gap^{2n} = 1/eps — n = 24 for gap 2.
  const int n_power = c.cfg.horizon("splitting", 24);
  const SplittingReport rep =
      invariant_splitting(b_coc, a0, n_power,
                          c.cfg.count("splitting", 12), c.cfg.seed);
  c.check("splitting_axes", rep.samples, rep.max_axis_distance, 0.0,
          rep.max_axis_distance <= c.cfg.tol("axes", 0.1));
  c.check_row({"splitting_invariance", rep.samples,
               rep.max_invariance_residual, 0.0, rep.verdict});

  const double exp_tol = c.cfg.tol("exponent", 0.02);
  for (size_t i = 0; i < rep.moduli.size(); ++i) {
    const double want = std::log(rep.moduli[i]);
    const double got = rep.block_exponents[i];
    c.check("block_exponent_" + std::to_string(i), 1, std::abs(got - want),
            got, std::abs(got - want) <= exp_tol);
  }

  // Per-block one-exponent pipeline: restrict to the estimated subbundle via
  // per-point frames, rescale by the reference modulus, and ask for an
  // invariant metric. The restriction is gauge-dependent per point, but
  // boundedness and the metric's invariance defect are gauge-invariant.
  const TorusPoint x0(0.37, 0.21);
  for (size_t i = 0; i < rep.moduli.size(); ++i) {
    const double rho_i = rep.moduli[i];
    const int mult = rep.multiplicities[i];
    auto frame = [&, i](const TorusPoint& p) -> Mat {
      return splitting_frames(b_coc, a0, n_power, p)[i];
    };
    auto gen = [frame, &b_coc, rho_i](const TorusPoint& p) -> Mat {
      const TorusPoint fp = step(*b_coc.base, p, 1);
      return frame(fp).transpose() * b_coc.generator(p) * frame(p) / rho_i;
    };
    auto gen_inv = [gen](const TorusPoint& p) -> Mat {
      return gen(p).partialPivLu().inverse();
    };
    const Cocycle restricted = make_cocycle(c.sys, mult, gen, gen_inv);
    const SpdPoint metric =
        invariant_metric(restricted, x0, c.cfg.horizon("block_metric", 10),
                         c.cfg.count("metric_iterations", 80));
    c.check("block_metric_" + std::to_string(i), 1, metric.invariance_residual,
            rho_i,
            metric.invariance_residual <= c.cfg.tol("block_metric", 0.05));
  }

  CsvTable split;
  split.header = {"group", "modulus", "multiplicity", "block_exponent"};
  for (size_t i = 0; i < rep.moduli.size(); ++i)
    split.rows.push_back({std::to_string(i), format_number(rep.moduli[i]),
                          std::to_string(rep.multiplicities[i]),
                          format_number(rep.block_exponents[i])});
  c.emit("splitting", split);
}

// ---------------------------------------------------------------------------
// holonomy-verify: the transport-law property suite on an analytic
// fiber-bunched cocycle (stock: a near-identity two-mode field), emitted as
// one property table.
// ---------------------------------------------------------------------------
Cocycle suite_cocycle(Ctx& c) {
  if (!c.cfg.generator.empty())
    return make_cocycle(c.sys, c.cfg.generators.at(c.cfg.generator));
  FieldTerm t1, t2;
  t1.k = IVec(2);
  t1.k << 1, 0;
  t1.P.setZero(2, 2);
  t1.Q.setZero(2, 2);
  t1.P << 0.4, -0.2, 0.3, 0.1;
  t1.Q << 0.1, 0.5, -0.3, 0.2;
  t1.P *= 0.15;
  t1.Q *= 0.15;
  t2.k = IVec(2);
  t2.k << 0, 1;
  t2.P.setZero(2, 2);
  t2.Q.setZero(2, 2);
  t2.P << -0.3, 0.2, 0.1, 0.4;
  t2.Q << 0.2, -0.1, 0.4, 0.3;
  t2.P *= 0.15;
  t2.Q *= 0.15;
  return make_cocycle(c.sys, make_matrix_field(Mat::Identity(2, 2), {t1, t2}));
}

void scenario_holonomy_verify(Ctx& c) {
  const Cocycle coc = suite_cocycle(c);
  const std::vector<PropertyRow> rows = holonomy_property_suite(
      coc, c.cfg.count("holonomy", 50), c.cfg.tol("holonomy", 1e-10),
      c.cfg.seed);
  c.emit("properties", property_table(rows));
  for (const auto& r : rows) c.check_row(property_as_check(r));
}

// ---------------------------------------------------------------------------
// twist-verify
//
// A constant rotation twist F = R: inverse products are isometries, so the
// forward orbit series cannot converge — yet an analytic solution of
// phi = eta - F^{-1} eta(f.) exists whenever phi is built as the twisted
// coboundary of an analytic eta (the frequency-space recursion terminates).
// The scenario constructs such a pair explicitly, checks the equation
// pointwise, feeds eta to the twisted-holonomy invariance suite (the
// substantive check: the affine transport must carry eta(x) to eta(y)), and
// confirms the forward series refuses with no_convergence as specified.
// ---------------------------------------------------------------------------
void scenario_twist_verify(Ctx& c) {
  const auto& sys = *c.sys;
  require(sys.dim() == 2, ErrorCode::config_error,
          "base_matrix: twist-verify is specified over a 2-torus base");
  const Mat R = rot2(0.7);
  const Mat Rinv = R.transpose();
  const Cocycle twist = make_cocycle(c.sys, constant_field(R));

  // eta with a constant part and two modes; phi = eta - R^{-1} eta∘f shifts
  // each mode k to an extra mode at L^T k with coefficients -R^{-1}(...).
  Vec e_const(2);
  e_const << 0.05, -0.1;
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
  const VectorField eta = make_vector_field(e_const, eta_terms, 2);

  const IMat Lt = sys.matrix().transpose();
  std::vector<VectorTerm> phi_terms;
  for (const auto& t : eta_terms) {
    phi_terms.push_back(t);
    VectorTerm shifted;
    shifted.k = Lt * t.k;
    shifted.p = -(Rinv * t.p);
    shifted.q = -(Rinv * t.q);
    phi_terms.push_back(shifted);
  }
  const VectorField phi =
      make_vector_field(e_const - Rinv * e_const, phi_terms, 2);

  const SampleStream rng(c.cfg.seed);
  double eq_res = 0.0;
  const int pts = c.cfg.count("points", 30);
  for (int i = 0; i < pts; ++i) {
    const TorusPoint x = sample_point(rng, i, 2);
    const TorusPoint fx = step(sys, x, 1);
    const Vec r = evaluate(phi, x) - evaluate(eta, x) +
                  twist.generator_inverse(x) * evaluate(eta, fx);
    eq_res = std::max(eq_res, r.norm());
  }
  c.check("twisted_equation_residual", pts, eq_res, 0.0,
          eq_res < c.cfg.tol("twisteq", 1e-9));

  const std::vector<PropertyRow> rows = twisted_invariance_residual(
      twist, phi, [&eta](const TorusPoint& p) { return evaluate(eta, p); },
      c.cfg.count("pairs", 30), c.cfg.tol("series", 1e-10), c.cfg.seed + 1);
  c.emit("properties", property_table(rows));
  for (const auto& r : rows) c.check_row(property_as_check(r));

  bool refused = false;
  try {
    solve_twisted_coboundary(twist, phi, sample_point(rng, 1000, 2));
  } catch (const LabError& e) {
    refused = e.code() == ErrorCode::no_convergence;
  }
  c.check("forward_series_refuses_isometric_twist", 1, 0.0, 0.0, refused);
}

using ScenarioFn = void (*)(Ctx&);

const std::map<std::string, ScenarioFn>& scenario_table() {
  static const std::map<std::string, ScenarioFn> table = {
      {"pw-demo", scenario_pw_demo},
      {"one-exponent", scenario_one_exponent},
      {"perturbation", scenario_perturbation},
      {"holonomy-verify", scenario_holonomy_verify},
      {"twist-verify", scenario_twist_verify},
  };
  return table;
}

// --- config parsing --------------------------------------------------------

IMat default_base() {
  IMat m(2, 2);
  m << 2, 1, 1, 1;
  return m;
}

IMat parse_base_matrix(const json& j) {
  if (!j.is_array() || j.empty()) config_fail("base_matrix", "expected an array of rows");
  const int n = static_cast<int>(j.size());
  IMat m(n, n);
  for (int r = 0; r < n; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      config_fail("base_matrix[" + std::to_string(r) + "]",
                  "expected a row of " + std::to_string(n) + " integers");
    for (int cc = 0; cc < n; ++cc) {
      if (!row[cc].is_number_integer())
        config_fail("base_matrix[" + std::to_string(r) + "][" +
                        std::to_string(cc) + "]",
                    "expected an integer");
      m(r, cc) = row[cc].get<long long>();
    }
  }
  return m;
}

template <typename T>
std::map<std::string, T> parse_named(const json& j, const std::string& path,
                                     bool positive) {
  std::map<std::string, T> out;
  if (!j.is_object()) config_fail(path, "expected an object");
  for (const auto& [key, val] : j.items()) {
    if (!val.is_number())
      config_fail(path + "." + key, "expected a number");
    const T v = val.template get<T>();
    if (positive && !(v > 0)) config_fail(path + "." + key, "must be positive");
    out[key] = v;
  }
  return out;
}

}  // namespace

double ScenarioConfig::tol(const std::string& key, double fallback) const {
  auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

int ScenarioConfig::horizon(const std::string& key, int fallback) const {
  auto it = n_max.find(key);
  return it == n_max.end() ? fallback : it->second;
}

int ScenarioConfig::count(const std::string& key, int fallback) const {
  auto it = samples.find(key);
  return it == samples.end() ? fallback : it->second;
}

ScenarioConfig default_scenario_config() {
  ScenarioConfig cfg;
  cfg.base_matrix = default_base();
  cfg.canonical = "{}";
  return cfg;
}

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    config_fail("(root)", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_fail("(root)", "expected a JSON object");

  ScenarioConfig cfg = default_scenario_config();
  for (const auto& [key, val] : j.items()) {
    if (key == "base_matrix") {
      cfg.base_matrix = parse_base_matrix(val);
    } else if (key == "leaf_radius") {
      if (!val.is_number() || !(val.get<double>() > 0))
        config_fail("leaf_radius", "expected a positive number");
      cfg.leaf_radius = val.get<double>();
    } else if (key == "generators") {
      if (!val.is_object()) config_fail("generators", "expected an object");
      for (const auto& [name, spec] : val.items()) {
        try {
          cfg.generators[name] = field_from_json(spec.dump());
        } catch (const LabError& e) {
          config_fail("generators." + name, e.what());
        }
      }
    } else if (key == "generator") {
      if (!val.is_string()) config_fail("generator", "expected a string");
      cfg.generator = val.get<std::string>();
    } else if (key == "beta") {
      if (!val.is_number() || !(val.get<double>() > 0))
        config_fail("beta", "expected a positive number");
      cfg.beta = val.get<double>();
    } else if (key == "tolerances") {
      cfg.tolerances = parse_named<double>(val, "tolerances", true);
    } else if (key == "n_max") {
      cfg.n_max = parse_named<int>(val, "n_max", true);
    } else if (key == "samples") {
      cfg.samples = parse_named<int>(val, "samples", true);
    } else if (key == "seed") {
      if (!val.is_number_integer() ||
          (val.is_number_integer() && !val.is_number_unsigned() &&
           val.get<long long>() < 0))
        config_fail("seed", "expected a non-negative 64-bit integer");
      cfg.seed = val.get<uint64_t>();
    } else if (key == "out_dir") {
      if (!val.is_string() || val.get<std::string>().empty())
        config_fail("out_dir", "expected a non-empty string");
      cfg.out_dir = val.get<std::string>();
    } else {
      config_fail(key, "unknown configuration key");
    }
  }
  if (!cfg.generator.empty() && !cfg.generators.count(cfg.generator))
    config_fail("generator",
                "references generator '" + cfg.generator +
                    "' which is not defined under generators");
  cfg.canonical = j.dump();
  return cfg;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : scenario_table()) v.push_back(name);
    return v;
  }();
  return names;
}

ScenarioResult run_scenario(const std::string& name, const ScenarioConfig& cfg,
                            bool serial) {
  (void)serial;  // evaluation is serial either way; sampling is counter-keyed
  auto it = scenario_table().find(name);
  if (it == scenario_table().end()) {
    std::ostringstream msg;
    msg << "unknown scenario '" << name << "'; known:";
    for (const auto& n : scenario_names()) msg << ' ' << n;
    throw LabError(ErrorCode::invalid_argument, msg.str());
  }

  Ctx ctx{cfg,
          name,
          std::make_shared<const HyperbolicAutomorphism>(
              make_automorphism(cfg.base_matrix, cfg.leaf_radius)),
          {},
          {},
          {}};
  it->second(ctx);

  if (!ctx.checks.empty()) ctx.emit("checks", check_table(ctx.checks));

  ScenarioResult res;
  res.verdict = ctx.failing.empty() ? Verdict::pass : Verdict::fail;
  res.exit_code = ctx.failing.empty() ? 0 : 1;
  res.failing_check = ctx.failing;
  res.csv_paths = ctx.csv_paths;

  upsert_manifest(cfg.out_dir + "/manifest.csv",
                  {name, cfg.seed, hex64(fnv1a64(cfg.canonical)), res.verdict});
  return res;
}

}  // namespace clab
