// Command-line driver for the verification suites.
#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "kinspec/experiment.hpp"

int main(int argc, char** argv) {
  using namespace kinspec;
  CLI::App app{"Spectral verification of the linearized kinetic-field model"};
  std::string suite = "all", config_path, out, cache_dir;
  int n_axis = 0, workers = 0, shells = 0;
  std::vector<double> eps, s_grid;
  bool smoke = false;
  app.add_option("--suite", suite, "spectrum, expansion, semigroup, limit, kernels or all");
  app.add_option("--config", config_path, "JSON configuration file (command-line flags override it)");
  app.add_option("--n-axis", n_axis, "velocity nodes per axis for the spectral checks");
  app.add_option("--eps", eps, "eps values for the limit checks");
  app.add_option("--s-grid", s_grid, "|xi| points for the expansion checks");
  app.add_option("--shells", shells, "radial shells for the time-domain checks");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads for the shell sweeps");
  app.add_option("--cache-dir", cache_dir, "collision-matrix cache directory");
  app.add_flag("--smoke", smoke, "reduced resolutions for a quick run");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    if (smoke) cfg.apply_smoke();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw KinError("io", "cannot read " + config_path);
      std::stringstream ss;
      ss << is.rdbuf();
      cfg = config_from_json(ss.str(), cfg);
    }
    if (app.count("--suite")) cfg.suite = suite;
    if (n_axis) cfg.n_axis = n_axis;
    if (!eps.empty()) cfg.eps = eps;
    if (!s_grid.empty()) cfg.s_grid = s_grid;
    if (shells) cfg.shells = shells;
    if (!out.empty()) cfg.out_dir = out;
    if (workers) cfg.workers = workers;
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    cfg.validate();
    const ExperimentRecord rec = run_suite(cfg);
    const std::string report = emit_report(rec, cfg.out_dir);
    int fails = 0;
    for (const auto& c : rec.checks) {
      std::printf("[%s] C%d %s: %s (expected %s)\n", c.pass ? "PASS" : "FAIL", c.criterion, c.id.c_str(),
                  c.measured.c_str(), c.expectation.c_str());
      fails += !c.pass;
    }
    std::printf("%zu checks, %d failed; report at %s\n", rec.checks.size(), fails, report.c_str());
    return fails == 0 ? 0 : 1;
  } catch (const KinError& e) {
    std::fprintf(stderr, "error (%s): %s\n", e.kind().c_str(), e.what());
    return e.kind() == "usage" || e.kind() == "config" ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
