#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clab/cocycle.hpp"
#include "clab/holonomy.hpp"

namespace clab {

// All numbers in CSV output go through one formatter so reruns are
// byte-comparable: shortest round-trippable-ish fixed choice, "%.12g".
std::string format_number(double v);

// RFC-4180-style quoting, applied only when the cell needs it.
std::string csv_escape(const std::string& cell);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Serialize with '\n' line endings and a trailing newline; every cell is
// escaped. The bytes are the determinism contract, so nothing here may
// depend on locale, pointers, or time.
std::string to_csv(const CsvTable& t);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Property suites (holonomy module shape).
CsvTable property_table(const std::vector<PropertyRow>& rows);

// Growth certificates (cocycle module shape).
CsvTable growth_table(const std::vector<GrowthReport>& rows);

// Conjugacy-engine style reports: one named check per row.
struct CheckRow {
  std::string check;
  int samples = 0;
  double max_residual = 0.0;
  double slope_or_rate = 0.0;
  Verdict verdict = Verdict::inconclusive;
};
CsvTable check_table(const std::vector<CheckRow>& rows);

// FNV-1a, the 64-bit variant; used to fingerprint canonical config text.
uint64_t fnv1a64(const std::string& text);
std::string hex64(uint64_t v);

// One row per scenario in manifest.csv; rerunning a scenario replaces its
// row in place (rows stay sorted by scenario name) so regression diffs see
// stable bytes rather than an append log.
struct ManifestRow {
  std::string scenario;
  uint64_t seed = 0;
  std::string config_hash;
  Verdict verdict = Verdict::inconclusive;
};
void upsert_manifest(const std::string& path, const ManifestRow& row);

}  // namespace clab
