#pragma once

#include <map>
#include <string>
#include <vector>

#include "kinspec/limits.hpp"

namespace kinspec {

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s = {"spectrum", "expansion", "semigroup", "limit", "kernels", "all"};
  return s;
}

struct ExperimentConfig {
  std::string suite = "all";
  bool smoke = false;
  int n_axis = 12;                  // spectral checks
  std::vector<int> n_conv = {8, 12, 16};  // resolution study of the collision operator
  int n_limit = 8;                  // velocity resolution of the time-domain checks
  int shells = 200;
  std::vector<double> eps = {0.1, 0.05};  // halving pair(s) for the limit checks
  std::vector<double> s_grid = {0.2, 0.5, 1.0};  // expansion-order points
  std::string out_dir = "results_run";
  std::string cache_dir;
  int workers = 1;
  double nullspace_tol = 1e-8;
  double root_tol = 1e-12;
  double ode_tol = 1e-10;
  double recon_tol = 1e-8;
  double r0 = 0.1, r1 = 5.0;

  /// Smoke defaults: N = 8, 20 shells, two ε values.
  void apply_smoke();
  /// Throws "config" on invalid values.
  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});
std::string config_to_json(const ExperimentConfig& c);

struct Check {
  int criterion = 0;
  std::string id;
  std::string ref;          // topic the check verifies
  std::string expectation;
  std::string measured;
  bool pass = false;
  std::string detail;
};

struct ExperimentRecord {
  std::string config_json;
  std::string started, finished;
  std::vector<Check> checks;
  std::vector<std::string> files;  // relative to out_dir
  bool all_pass() const;
};

/// Runs the selected suite; module errors become failed checks.
ExperimentRecord run_suite(const ExperimentConfig& cfg);
/// Writes report.md and manifest.json into cfg.out_dir; returns the report path.
std::string emit_report(const ExperimentRecord& rec, const std::string& out_dir);

}  // namespace kinspec
