#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "clab/conjugacy.hpp"
#include "clab/errors.hpp"
#include "clab/holonomy.hpp"
#include "clab/rng.hpp"
#include "clab/scenario.hpp"
#include "doctest.h"

using namespace clab;

namespace {

void check_config_error(const std::string& json_text,
                        const std::string& needle) {
  try {
    parse_scenario_config(json_text);
    FAIL_CHECK("expected config_error for ", json_text);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
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

std::string fresh_dir(const std::string& leaf) {
  const std::string dir = "scenario_test_out/" + leaf;
  std::filesystem::remove_all(dir);
  return dir;
}

double cell_double(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_CASE("scenario config defaults and full parse") {
  const ScenarioConfig def = default_scenario_config();
  CHECK(def.base_matrix.rows() == 2);
  CHECK(def.base_matrix(0, 0) == 2);
  CHECK(def.base_matrix(0, 1) == 1);
  CHECK(def.base_matrix(1, 0) == 1);
  CHECK(def.base_matrix(1, 1) == 1);
  CHECK(def.seed == 20260815);
  CHECK(def.out_dir == "out");
  CHECK(def.canonical == "{}");
  CHECK(def.tol("anything", 0.25) == 0.25);
  CHECK(def.horizon("anything", 7) == 7);

  const std::string text = R"({
    "base_matrix": [[2, 1], [1, 1]],
    "leaf_radius": 0.3,
    "beta": 0.8,
    "seed": 99,
    "out_dir": "elsewhere",
    "tolerances": {"convergence": 1e-5},
    "n_max": {"partial_sums": 200},
    "samples": {"points": 50},
    "generators": {
      "wavy": {
        "dimension": 2,
        "base_dimension": 2,
        "constant_factor": [1, 0, 0, 1],
        "terms": [{"k": [1, 0],
                   "P": [0.1, 0, 0, 0.1],
                   "Q": [0, 0.05, -0.05, 0]}]
      }
    },
    "generator": "wavy"
  })";
  const ScenarioConfig cfg = parse_scenario_config(text);
  CHECK(cfg.leaf_radius == doctest::Approx(0.3));
  CHECK(cfg.beta == doctest::Approx(0.8));
  CHECK(cfg.seed == 99);
  CHECK(cfg.out_dir == "elsewhere");
  CHECK(cfg.tol("convergence", 1.0) == doctest::Approx(1e-5));
  CHECK(cfg.horizon("partial_sums", 0) == 200);
  CHECK(cfg.count("points", 0) == 50);
  CHECK(cfg.generator == "wavy");
  REQUIRE(cfg.generators.count("wavy") == 1);
  CHECK(cfg.generators.at("wavy").dimension == 2);
  CHECK(!cfg.canonical.empty());
  // Canonical form is key-sorted, so two spellings of the same object hash
  // identically.
  const ScenarioConfig cfg2 =
      parse_scenario_config(R"({"seed": 99, "beta": 0.8})");
  const ScenarioConfig cfg3 =
      parse_scenario_config(R"({"beta": 0.8, "seed": 99})");
  CHECK(cfg2.canonical == cfg3.canonical);
}

TEST_CASE("scenario config errors name the offending field") {
  check_config_error(R"({"typo_key": 1})", "typo_key");
  check_config_error(R"({"generator": "ghost"})", "generator");
  check_config_error(R"({"generator": "ghost"})", "ghost");
  check_config_error(R"({"tolerances": {"conv": -1.0}})", "tolerances.conv");
  check_config_error(R"({"n_max": {"foo": 0}})", "n_max.foo");
  check_config_error(R"({"samples": {"bar": -3}})", "samples.bar");
  check_config_error("{nope", "invalid JSON");
  check_config_error("[1, 2]", "object");
  check_config_error(R"({"base_matrix": [[1, 2], [3]]})", "base_matrix");
  check_config_error(R"({"base_matrix": [[1.5, 2], [3, 4]]})", "base_matrix");
  check_config_error(R"({"seed": -5})", "seed");
  check_config_error(R"({"out_dir": ""})", "out_dir");
  check_config_error(R"({"generators": {"bad": {"dimension": 0}}})",
                     "generators.bad");
}

TEST_CASE("unknown scenario is rejected with the known list") {
  ScenarioConfig cfg = default_scenario_config();
  try {
    run_scenario("no-such-thing", cfg);
    FAIL_CHECK("expected invalid_argument");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(std::string(e.what()).find("pw-demo") != std::string::npos);
  }
  CHECK(scenario_names().size() == 5);
}

// The demo's backward substitution must agree with the generic twisted
// solver run over the inverse base map: with g = f^{-1}, twist
// F(y) = 1/a(f^{-1}y) and phi(y) = -b(f^{-1}y), the solver's forward series
// over g is exactly the backward sum -sum_k T_{k-1}(x) b(f^{-k}x).
TEST_CASE("pw-demo expansion agrees with the twisted-coboundary solver") {
  const long long cat[4] = {2, 1, 1, 1};
  auto fwd = std::make_shared<const HyperbolicAutomorphism>(
      make_automorphism(2, cat));
  auto bwd = std::make_shared<const HyperbolicAutomorphism>(fwd->inverse());
  const double alpha = -0.2, eps = 1.0;
  const double two_pi = 6.283185307179586476925286766559;
  auto a = [&](const TorusPoint& x) {
    return std::exp(alpha + eps * std::cos(two_pi * x.coords[0]));
  };
  auto b = [&](const TorusPoint& x) {
    return std::sin(two_pi * x.coords[0]);
  };

  auto gen = [&](const TorusPoint& y) -> Mat {
    Mat m(1, 1);
    m << 1.0 / a(step(*fwd, y, -1));
    return m;
  };
  auto gen_inv = [&](const TorusPoint& y) -> Mat {
    Mat m(1, 1);
    m << a(step(*fwd, y, -1));
    return m;
  };
  const Cocycle twist = make_cocycle(bwd, 1, gen, gen_inv);
  const VectorEvaluator phi = [&](const TorusPoint& y) -> Vec {
    Vec v(1);
    v << -b(step(*fwd, y, -1));
    return v;
  };

  const SampleStream rng(4242);
  for (int i = 0; i < 4; ++i) {
    const TorusPoint x(rng.uniform(i, 0), rng.uniform(i, 1));
    // Direct backward sum, 500 terms.
    double T = 1.0, direct = 0.0;
    TorusPoint y = x;
    for (int k = 1; k <= 500; ++k) {
      y = step(*fwd, y, -1);
      direct -= T * b(y);
      T *= a(y);
    }
    const Vec solved = solve_twisted_coboundary(twist, phi, x, 1e-12, 2000);
    CHECK(std::abs(solved[0] - direct) < 1e-8);
  }
}

TEST_CASE("pw-demo scenario: a.e. convergence with diverging sup") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("pw");
  cfg.samples["points"] = 150;
  cfg.samples["monte_carlo"] = 800;
  const ScenarioResult res = run_scenario("pw-demo", cfg);
  CHECK(res.verdict == Verdict::pass);
  CHECK(res.exit_code == 0);
  CHECK(res.failing_check.empty());

  const auto curve = parse_csv(read_file(cfg.out_dir + "/pw-demo_sup_curve.csv"));
  double sup200 = -1.0, sup400 = -1.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    if (curve[i][0] == "200") sup200 = cell_double(curve[i][1]);
    if (curve[i][0] == "400") sup400 = cell_double(curve[i][1]);
  }
  REQUIRE(sup200 > 0.0);
  REQUIRE(sup400 > 0.0);
  CHECK(sup400 > 2.0 * sup200);  // the periodic-orbit obstruction shows up

  const auto pts = parse_csv(read_file(cfg.out_dir + "/pw-demo_points.csv"));
  int probes = 0, probe_converged = 0, uniform_converged = 0, uniforms = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (pts[i][1] == "probe") {
      ++probes;
      probe_converged += pts[i][2] == "1";
    } else {
      ++uniforms;
      uniform_converged += pts[i][2] == "1";
    }
  }
  CHECK(probes == 8);
  CHECK(probe_converged == 0);  // the rational orbit diverges pointwise
  CHECK(uniforms == 150);
  CHECK(uniform_converged >= 143);
}

TEST_CASE("holonomy-verify scenario passes and reruns byte-identically") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("holo");
  cfg.samples["holonomy"] = 12;
  const ScenarioResult res = run_scenario("holonomy-verify", cfg);
  CHECK(res.verdict == Verdict::pass);
  CHECK(res.exit_code == 0);

  const std::string props_path = cfg.out_dir + "/holonomy-verify_properties.csv";
  const std::string first = read_file(props_path);
  const std::string manifest_first = read_file(cfg.out_dir + "/manifest.csv");

  const auto rows = parse_csv(first);
  bool saw_h2 = false;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] == "H2-composition") {
      saw_h2 = true;
      CHECK(cell_double(rows[i][2]) < 1e-8);
    }
    CHECK(rows[i].back() == "pass");
  }
  CHECK(saw_h2);

  // Serial rerun with the same seed reproduces every byte, manifest included.
  const ScenarioResult again = run_scenario("holonomy-verify", cfg, true);
  CHECK(again.verdict == Verdict::pass);
  CHECK(read_file(props_path) == first);
  CHECK(read_file(cfg.out_dir + "/manifest.csv") == manifest_first);
}

TEST_CASE("twist-verify scenario: solvable equation with refusing series") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("twist");
  cfg.samples["points"] = 12;
  cfg.samples["pairs"] = 10;
  const ScenarioResult res = run_scenario("twist-verify", cfg);
  CHECK(res.verdict == Verdict::pass);
  CHECK(res.exit_code == 0);

  const auto checks = parse_csv(read_file(cfg.out_dir + "/twist-verify_checks.csv"));
  bool saw_refusal = false, saw_eq = false;
  for (size_t i = 1; i < checks.size(); ++i) {
    if (checks[i][0] == "forward_series_refuses_isometric_twist") {
      saw_refusal = true;
      CHECK(checks[i].back() == "pass");
    }
    if (checks[i][0] == "twisted_equation_residual") {
      saw_eq = true;
      CHECK(cell_double(checks[i][2]) < 1e-9);
    }
  }
  CHECK(saw_refusal);
  CHECK(saw_eq);
}

TEST_CASE("manifest accumulates sorted scenario rows across runs") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("manifest");
  cfg.samples["points"] = 10;
  cfg.samples["pairs"] = 8;
  cfg.samples["holonomy"] = 6;
  run_scenario("twist-verify", cfg);
  run_scenario("holonomy-verify", cfg);
  const std::string once = read_file(cfg.out_dir + "/manifest.csv");
  const auto rows = parse_csv(once);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "scenario");
  CHECK(rows[1][0] == "holonomy-verify");  // sorted, not insertion order
  CHECK(rows[2][0] == "twist-verify");
  CHECK(rows[1][1] == "20260815");
  CHECK(rows[1].back() == "pass");
  CHECK(rows[1][2] == rows[2][2]);  // same config, same hash

  // Upsert replaces in place: rerunning one scenario leaves the bytes alone.
  run_scenario("twist-verify", cfg);
  CHECK(read_file(cfg.out_dir + "/manifest.csv") == once);
}

TEST_CASE("one-exponent scenario recovers the analytic conjugacy") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("onexp");
  cfg.samples["conjugacy"] = 12;
  cfg.samples["intertwining"] = 4;
  cfg.samples["holder"] = 12;
  const ScenarioResult res = run_scenario("one-exponent", cfg);
  CHECK(res.failing_check.empty());
  CHECK(res.verdict == Verdict::pass);

  const auto checks = parse_csv(read_file(cfg.out_dir + "/one-exponent_checks.csv"));
  bool saw_spectral = false;
  for (size_t i = 1; i < checks.size(); ++i)
    if (checks[i][0].find("spectral") != std::string::npos) saw_spectral = true;
  CHECK(saw_spectral);  // constant diagonal blocks must take the exact route
}

TEST_CASE("perturbation scenario tracks the reference splitting") {
  ScenarioConfig cfg = default_scenario_config();
  cfg.out_dir = fresh_dir("perturb");
  cfg.samples["splitting"] = 6;
  const ScenarioResult res = run_scenario("perturbation", cfg);
  CHECK(res.failing_check.empty());
  CHECK(res.verdict == Verdict::pass);

  const auto split = parse_csv(read_file(cfg.out_dir + "/perturbation_splitting.csv"));
  REQUIRE(split.size() == 4);  // header + three modulus groups
  CHECK(cell_double(split[1][1]) == doctest::Approx(0.5));
  CHECK(cell_double(split[2][1]) == doctest::Approx(1.0));
  CHECK(cell_double(split[3][1]) == doctest::Approx(2.0));
  CHECK(split[2][2] == "2");  // the rotation block has multiplicity two
  CHECK(std::abs(cell_double(split[1][3]) - std::log(0.5)) < 0.02);
  CHECK(std::abs(cell_double(split[3][3]) - std::log(2.0)) < 0.02);
}
