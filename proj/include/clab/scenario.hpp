#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clab/cocycle.hpp"
#include "clab/report.hpp"

namespace clab {

// Everything a scenario may consume. Parsed from a JSON object; every field
// has a default so an empty object (or no --config at all) runs the stock
// experiment. Unknown keys are rejected so typos surface as config_error
// with the offending path rather than as silently ignored settings.
struct ScenarioConfig {
  IMat base_matrix;        // hyperbolic integer matrix; default [[2,1],[1,1]]
  double leaf_radius = 0.4;
  std::map<std::string, MatrixField> generators;  // named closed-form fields
  std::string generator;   // which entry drives the suite scenarios; "" = stock
  double beta = 1.0;
  std::map<std::string, double> tolerances;  // per-check overrides, all > 0
  std::map<std::string, int> n_max;          // per-check horizon overrides
  std::map<std::string, int> samples;        // per-check sample-count overrides
  uint64_t seed = 20260815;
  std::string out_dir = "out";
  std::string canonical;   // canonical serialization backing the config hash

  double tol(const std::string& key, double fallback) const;
  int horizon(const std::string& key, int fallback) const;
  int count(const std::string& key, int fallback) const;
};

ScenarioConfig default_scenario_config();
// Throws config_error naming the JSON path of the offending field.
ScenarioConfig parse_scenario_config(const std::string& json_text);

struct ScenarioResult {
  Verdict verdict = Verdict::inconclusive;
  int exit_code = 1;
  std::string failing_check;  // empty on pass
  std::vector<std::string> csv_paths;
};

const std::vector<std::string>& scenario_names();

// Runs one named scenario: writes <out>/<name>_<check>.csv artifacts and
// upserts <out>/manifest.csv, returns the verdict. Serial mode is the
// determinism reference (identical config and seed => identical bytes);
// this build evaluates serially either way, with sampling keyed by counter
// so a parallel scheduler would reproduce the same draws.
ScenarioResult run_scenario(const std::string& name, const ScenarioConfig& cfg,
                            bool serial = true);

}  // namespace clab
