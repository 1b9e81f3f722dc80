// Acceptance run: one verdict line per criterion, plus a determinism check over two full runs.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "kinspec/experiment.hpp"

namespace fs = std::filesystem;
using namespace kinspec;

namespace {

// Checks whose failure is analyzed in the decisions ledger (entry names in brackets).
const std::map<std::string, std::string> kExpected = {
    {"c1.raw_residual", "collision residual at N=12"},
    {"c4.order{0}", "even-in-eps real branches"},
    {"c4.order{2,3}", "even-in-eps real branches"},
    {"c5.band", "unresolved high-frequency resonance"},
    {"c8.t1_ratio", "L-inf surrogate keeps oscillating modes"},
    {"c9.PA_generic", "pre-asymptotic decay window"},
    {"c11.mixed_m0_j0_inf", "pre-asymptotic mixed-symbol window"},
    {"c11.mixed_m0_j1_inf", "pre-asymptotic mixed-symbol window"},
    {"c11.mixed_m1_j0_inf", "pre-asymptotic mixed-symbol window"},
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cache_dir, out = "acceptance_run";
  int workers = 1;
  bool once = false;
  app.add_option("--cache-dir", cache_dir, "collision-matrix cache directory");
  app.add_option("--out", out, "output root");
  app.add_option("--workers", workers, "worker threads");
  app.add_flag("--single-run", once, "skip the second run (determinism criterion reported as not run)");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  cfg.cache_dir = cache_dir;
  cfg.workers = workers;
  cfg.out_dir = (fs::path(out) / "run_a").string();
  ExperimentRecord rec;
  try {
    rec = run_suite(cfg);
    emit_report(rec, cfg.out_dir);
  } catch (const std::exception& e) {
    std::printf("FAIL  run aborted: %s\n", e.what());
    return 1;
  }

  std::map<int, std::vector<const Check*>> by;
  for (const auto& c : rec.checks) by[c.criterion].push_back(&c);
  int unexpected = 0, expected = 0;
  for (int k = 1; k <= 11; ++k) {
    const auto& v = by[k];
    bool pass = !v.empty();
    std::string failed, why;
    std::set<std::string> refs;
    bool all_known = true;
    for (const Check* c : v) {
      if (c->pass) continue;
      pass = false;
      failed += (failed.empty() ? "" : ", ") + c->id + " = " + c->measured;
      auto it = kExpected.find(c->id);
      if (it == kExpected.end()) all_known = false;
      else refs.insert(it->second);
    }
    if (v.empty()) {
      std::printf("FAIL  criterion %2d: no checks recorded\n", k);
      ++unexpected;
    } else if (pass) {
      std::printf("PASS  criterion %2d: %zu checks\n", k, v.size());
    } else {
      for (const auto& r : refs) why += (why.empty() ? "" : "; ") + r;
      if (all_known) {
        ++expected;
        std::printf("FAIL  criterion %2d: %s [expected, ledger: %s]\n", k, failed.c_str(), why.c_str());
      } else {
        ++unexpected;
        std::printf("FAIL  criterion %2d: %s\n", k, failed.c_str());
      }
    }
    for (const Check* c : v)
      std::printf("        %s %-24s %s%s%s\n", c->pass ? "ok  " : "FAIL", c->id.c_str(), c->measured.c_str(),
                  c->detail.empty() ? "" : "  | ", c->detail.c_str());
  }

  if (once) {
    std::printf("SKIP  criterion 12: single run requested\n");
  } else {
    ExperimentConfig cfg2 = cfg;
    cfg2.out_dir = (fs::path(out) / "run_b").string();
    bool same = true;
    std::string diff;
    try {
      const ExperimentRecord rec2 = run_suite(cfg2);
      same = rec2.files == rec.files;
      for (const auto& f : rec.files)
        if (slurp(fs::path(cfg.out_dir) / f) != slurp(fs::path(cfg2.out_dir) / f)) {
          same = false;
          diff += " " + f;
        }
    } catch (const std::exception& e) {
      same = false;
      diff = std::string(" second run aborted: ") + e.what();
    }
    if (same) {
      std::printf("PASS  criterion 12: %zu CSV files byte-identical across two full runs\n", rec.files.size());
    } else {
      ++unexpected;
      std::printf("FAIL  criterion 12: outputs differ:%s\n", diff.c_str());
    }
  }
  std::printf("%d unexpected failures, %d criteria failing as analyzed in the ledger\n", unexpected, expected);
  return unexpected == 0 ? 0 : 1;
}
