#include "clab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clab/errors.hpp"

namespace clab {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  auto emit = [&os](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(cells[i]);
    }
    os << '\n';
  };
  emit(t.header);
  for (const auto& r : t.rows) emit(r);
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    require(!ec, ErrorCode::io_error,
            "cannot create directory " + p.parent_path().string());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::io_error, "cannot open " + path + " for write");
  f << content;
  require(f.good(), ErrorCode::io_error, "short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io_error, "cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

CsvTable property_table(const std::vector<PropertyRow>& rows) {
  CsvTable t;
  t.header = {"property", "samples", "max_residual",
              "fitted_slope", "n_max", "verdict"};
  for (const auto& r : rows)
    t.rows.push_back({r.property, std::to_string(r.samples),
                      format_number(r.max_residual),
                      format_number(r.fitted_slope), std::to_string(r.n_max),
                      to_string(r.verdict)});
  return t;
}

CsvTable growth_table(const std::vector<GrowthReport>& rows) {
  CsvTable t;
  t.header = {"kind",      "beta",  "n_max",  "samples",
              "theta_hat", "K_hat", "verdict"};
  for (const auto& r : rows)
    t.rows.push_back({to_string(r.kind), format_number(r.beta),
                      std::to_string(r.n_max), std::to_string(r.sample_count),
                      format_number(r.theta_hat), format_number(r.K_hat),
                      to_string(r.verdict)});
  return t;
}

CsvTable check_table(const std::vector<CheckRow>& rows) {
  CsvTable t;
  t.header = {"check", "samples", "max_residual", "slope_or_rate", "verdict"};
  for (const auto& r : rows)
    t.rows.push_back({r.check, std::to_string(r.samples),
                      format_number(r.max_residual),
                      format_number(r.slope_or_rate), to_string(r.verdict)});
  return t;
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void upsert_manifest(const std::string& path, const ManifestRow& row) {
  // Parse what is already there (our own writer's output: no quoting is ever
  // needed for these cells), replace or insert this scenario's row, rewrite.
  std::vector<std::vector<std::string>> rows;
  if (std::filesystem::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {  // header
        first = false;
        continue;
      }
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() == 4) rows.push_back(cells);
    }
  }
  std::vector<std::string> fresh = {row.scenario, std::to_string(row.seed),
                                    row.config_hash, to_string(row.verdict)};
  bool replaced = false;
  for (auto& r : rows)
    if (r[0] == row.scenario) {
      r = fresh;
      replaced = true;
    }
  if (!replaced) rows.push_back(fresh);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  CsvTable t;
  t.header = {"scenario", "seed", "config_hash", "verdict"};
  t.rows = rows;
  write_file(path, to_csv(t));
}

}  // namespace clab
