#include "kinspec/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kinspec/cache.hpp"
#include "kinspec/dispersion.hpp"

namespace kinspec {

namespace fs = std::filesystem;
using json = nlohmann::json;

void ExperimentConfig::apply_smoke() {
  smoke = true;
  n_axis = 8;
  n_conv = {8, 12};
  n_limit = 8;
  shells = 20;
  if (eps.size() > 2) eps.resize(2);
}

void ExperimentConfig::validate() const {
  if (suite.empty()) throw KinError("usage", "empty suite selector");
  if (std::find(known_suites().begin(), known_suites().end(), suite) == known_suites().end())
    throw KinError("usage", "unknown suite '" + suite + "'");
  if (n_axis < 4 || n_limit < 4) throw KinError("config", "velocity resolution must be at least 4");
  if (n_conv.size() < 2) throw KinError("config", "resolution study needs two resolutions");
  if (shells < 2) throw KinError("config", "need at least two shells");
  if (eps.size() < 2) throw KinError("config", "limit checks need at least two eps values");
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw KinError("config", "eps values must lie in (0,1)");
  for (double s : s_grid)
    if (!(s > 0)) throw KinError("config", "s grid must be positive");
  for (double t : {nullspace_tol, root_tol, ode_tol, recon_tol})
    if (!(t > 0)) throw KinError("config", "tolerances must be positive");
  if (!(r0 > 0) || !(r1 > r0)) throw KinError("config", "need 0 < r0 < r1");
  if (workers < 1) throw KinError("config", "workers must be positive");
  if (out_dir.empty()) throw KinError("config", "output directory required");
}

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw KinError("config", std::string("invalid JSON: ") + e.what());
  }
  auto get = [&](const char* k, auto& v) {
    if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
  };
  bool smoke = false;
  get("smoke", smoke);
  if (smoke) c.apply_smoke();
  get("suite", c.suite);
  get("n_axis", c.n_axis);
  get("n_conv", c.n_conv);
  get("n_limit", c.n_limit);
  get("shells", c.shells);
  get("eps", c.eps);
  get("s_grid", c.s_grid);
  get("out_dir", c.out_dir);
  get("cache_dir", c.cache_dir);
  get("workers", c.workers);
  get("nullspace_tol", c.nullspace_tol);
  get("root_tol", c.root_tol);
  get("ode_tol", c.ode_tol);
  get("recon_tol", c.recon_tol);
  get("r0", c.r0);
  get("r1", c.r1);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["suite"] = c.suite;
  j["smoke"] = c.smoke;
  j["n_axis"] = c.n_axis;
  j["n_conv"] = c.n_conv;
  j["n_limit"] = c.n_limit;
  j["shells"] = c.shells;
  j["eps"] = c.eps;
  j["s_grid"] = c.s_grid;
  j["out_dir"] = c.out_dir;
  j["cache_dir"] = c.cache_dir;
  j["workers"] = c.workers;
  j["nullspace_tol"] = c.nullspace_tol;
  j["root_tol"] = c.root_tol;
  j["ode_tol"] = c.ode_tol;
  j["recon_tol"] = c.recon_tol;
  j["r0"] = c.r0;
  j["r1"] = c.r1;
  return j.dump(2);
}

bool ExperimentRecord::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& p, const std::string& header) : os_(p) {
    if (!os_) throw KinError("io", "cannot write " + p.string());
    os_ << header << '\n';
  }
  template <class... A>
  void row(const A&... a) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(a), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  std::ofstream os_;
};

struct Runner {
  const ExperimentConfig& cfg;
  ExperimentRecord& rec;
  fs::path out;
  std::map<int, std::unique_ptr<std::pair<CollisionMatrices, MacroMoments>>> coll;
  std::map<int, std::unique_ptr<ModeContext>> ctxs;

  const std::pair<CollisionMatrices, MacroMoments>& get(int n) {
    auto it = coll.find(n);
    if (it != coll.end()) return *it->second;
    CollisionOptions o;
    o.nullspace_tol = cfg.nullspace_tol;
    auto p = std::make_unique<std::pair<CollisionMatrices, MacroMoments>>(
        cached_collision(cfg.cache_dir, n, Scheme::TensorHermite, o));
    return *(coll[n] = std::move(p));
  }
  const ModeContext& ctx(int n) {
    auto it = ctxs.find(n);
    if (it != ctxs.end()) return *it->second;
    auto p = std::make_unique<ModeContext>(make_mode_context(get(n).first));
    return *(ctxs[n] = std::move(p));
  }
  Csv csv(const std::string& name, const std::string& header) {
    fs::create_directories(out / "results");
    rec.files.push_back("results/" + name);
    return Csv(out / "results" / name, header);
  }
  void add(int crit, std::string id, std::string ref, std::string expect, std::string measured, bool pass,
           std::string detail = "") {
    rec.checks.push_back({crit, std::move(id), std::move(ref), std::move(expect), std::move(measured), pass,
                          std::move(detail)});
  }
  /// Runs body; any module error becomes a failed check.
  void guard(int crit, const std::string& id, const std::string& ref, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(crit, id, ref, "completes without error", "error", false, e.what());
    }
  }
  Regimes regimes() const { return {cfg.r0, cfg.r1}; }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------- spectrum

void suite_spectrum(Runner& R) {
  const auto& cfg = R.cfg;
  R.guard(1, "collision.structure", "collision operator", [&] {
    auto csv = R.csv("collision.csv",
                     "n,gap_mu,l_norm,raw0,raw1,raw2,raw3,raw4,post0,post1,post2,post3,post4,m11,m22,m33,m44,m14,kappa0,kappa1");
    std::vector<double> raw, post, gap, k0, k1, rot;
    for (int n : cfg.n_conv) {
      const auto& [c, m] = R.get(n);
      csv.row(n, c.gap_mu, c.l_norm, c.raw_residual[0], c.raw_residual[1], c.raw_residual[2], c.raw_residual[3],
              c.raw_residual[4], c.residual[0], c.residual[1], c.residual[2], c.residual[3], c.residual[4], m.m11,
              m.m22, m.m33, m.m44, m.m14, m.kappa0, m.kappa1);
      raw.push_back(*std::max_element(c.raw_residual.begin(), c.raw_residual.end()));
      post.push_back(*std::max_element(c.residual.begin(), c.residual.end()));
      gap.push_back(c.gap_mu);
      k0.push_back(m.kappa0);
      k1.push_back(m.kappa1);
      rot.push_back(std::abs(m.m22 - m.m33));
    }
    const double post_max = *std::max_element(post.begin(), post.end());
    R.add(1, "c1.post_deflation", "collision operator", "max_j ||L chi_j||/||L|| <= 1e-14 (exact up to rounding)", short_num(post_max),
          post_max <= 1e-14);
    const auto& [ca, ma] = R.get(cfg.n_axis);
    const double raw_axis = *std::max_element(ca.raw_residual.begin(), ca.raw_residual.end());
    R.add(1, "c1.raw_residual", "collision operator", "pre-deflation residual at N=" + std::to_string(cfg.n_axis) + " <= 1e-4",
          short_num(raw_axis), raw_axis <= 1e-4);
    const double dec = raw.front() / raw.back();
    R.add(1, "c1.raw_decrease", "collision operator",
          "residual decreases >= 4x from N=" + std::to_string(cfg.n_conv.front()) + " to N=" +
              std::to_string(cfg.n_conv.back()),
          short_num(dec), dec >= 4, "N=" + std::to_string(cfg.n_conv.front()) + ": " + short_num(raw.front()) +
                                        ", N=" + std::to_string(cfg.n_conv.back()) + ": " + short_num(raw.back()));
    const size_t a = gap.size() - 2, b = gap.size() - 1;
    const double gs = rel(gap[a], gap[b]);
    R.add(1, "c1.gap_stable", "collision operator", "gap_mu > 0 and stable within 5% across the two finest N", short_num(gs),
          gap[a] > 0 && gap[b] > 0 && gs <= 0.05, "gap " + short_num(gap[a]) + " vs " + short_num(gap[b]));
    // Fresh (uncached) assembly time at the spectral resolution.
    const auto t0 = std::chrono::steady_clock::now();
    CollisionOptions o;
    o.nullspace_tol = cfg.nullspace_tol;
    const CollisionMatrices fresh = assemble_collision(build_quadrature(cfg.n_axis), o);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    R.add(1, "c1.assembly_time", "collision operator", "assembly at N=" + std::to_string(cfg.n_axis) + " <= 300 s",
          short_num(dt) + " s", dt <= 300);
    (void)fresh;

    bool pos = true;
    for (size_t k = 0; k < k0.size(); ++k) pos = pos && k0[k] > 0 && k1[k] > 0;
    R.add(2, "c2.positive", "transport coefficients", "kappa0, kappa1 > 0 at every N", short_num(k0.back()) + ", " + short_num(k1.back()),
          pos);
    const double agree = std::max(rel(k0[a], k0[b]), rel(k1[a], k1[b]));
    R.add(2, "c2.agreement", "transport coefficients", "two-resolution agreement <= 0.5%", short_num(100 * agree) + " %", agree <= 0.005,
          "kappa0 " + short_num(k0[a]) + " / " + short_num(k0[b]) + ", kappa1 " + short_num(k1[a]) + " / " +
              short_num(k1[b]));
    const double rmax = *std::max_element(rot.begin(), rot.end());
    R.add(2, "c2.rotation", "transport coefficients", "|m22 - m33| <= 1e-8", short_num(rmax), rmax <= 1e-8);
  });

  R.guard(3, "c3.dichotomy", "spectral dichotomy", [&] {
    const auto& [c, m] = R.get(cfg.n_axis);
    const ModeContext& ctx = R.ctx(cfg.n_axis);
    auto csv = R.csv("dichotomy.csv", "s,eps,eps_s,count,expected");
    auto spec_csv = R.csv("spectrum.csv", "s,eps,label,re,im,pred_re,pred_im,residual");
    const double line = -c.gap_mu / 2;
    const std::vector<double> low_s = {0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 5.0};
    const std::vector<double> high_s = {20, 40, 80, 160, 320};
    int ok_low = 0, ok_high = 0;
    std::string bad;
    for (double s : low_s) {
      const double eps = std::min(0.5, 0.04 / s);
      const ModeOperator op = assemble_mode(ctx, s, eps);
      ModeSpectrum sp = eig_mode(op);
      const int cnt = sp.count_above(line);
      csv.row(s, eps, eps * s, cnt, 9);
      if (cnt == 9) ++ok_low;
      else bad += " (s=" + short_num(s) + ", eps=" + short_num(eps) + ": " + std::to_string(cnt) + ")";
      for (const auto& br : match_branches(sp, m))
        spec_csv.row(s, eps, br.label, br.lambda.real(), br.lambda.imag(), br.predicted.real(), br.predicted.imag(),
                     br.residual);
    }
    for (double s : high_s) {
      const double eps = 0.5;
      const ModeOperator op = assemble_mode(ctx, s, eps);
      ModeSpectrum sp = eig_mode(op);
      const int cnt = sp.count_above(line);
      csv.row(s, eps, eps * s, cnt, 4);
      if (cnt == 4) ++ok_high;
      else bad += " (s=" + short_num(s) + ", eps=" + short_num(eps) + ": " + std::to_string(cnt) + ")";
    }
    R.add(3, "c3.low_count", "low-frequency spectrum", "9 eigenvalues above -gap/2 at 10 points with eps*s <= 0.05",
          std::to_string(ok_low) + "/10", ok_low == 10, bad);
    R.add(3, "c3.high_count", "high-frequency spectrum", "4 eigenvalues above -gap/2 at 5 points with eps*s >= 10",
          std::to_string(ok_high) + "/5", ok_high == 5, bad);
  });
}

// ---------------------------------------------------------------- expansion

int label_class(int j) {
  if (j == -1 || j == 1) return 0;
  if (j == 0) return 1;
  if (j == 2 || j == 3) return 2;
  return 3;
}
const char* kClassName[4] = {"{-1,1}", "{0}", "{2,3}", "{4,5,6,7}"};

void suite_expansion(Runner& R) {
  const auto& cfg = R.cfg;
  R.guard(4, "c4.expansion", "eigenvalue expansion", [&] {
    const auto& [c, m] = R.get(cfg.n_axis);
    const ModeContext& ctx = R.ctx(cfg.n_axis);
    auto csv = R.csv("expansion.csv", "s,eps,label,re,im,pred_re,pred_im,residual");
    auto rcsv = R.csv("expansion_ratios.csv", "class,s,eps_hi,eps_lo,residual_hi,residual_lo,ratio");
    auto root_csv = R.csv("roots.csv", "s,eps,family,index,label,root_re,root_im,eig_re,eig_im,diff");
    const double e_hi = 0.04, e_lo = 0.02;
    std::array<bool, 4> class_ok{true, true, true, true};
    std::array<std::string, 4> class_detail;
    double worst_root = 0;
    std::string root_detail;
    for (double s : cfg.s_grid) {
      std::array<std::array<double, 4>, 2> res{};
      for (int pass = 0; pass < 2; ++pass) {
        const double eps = pass == 0 ? e_hi : e_lo;
        const ModeOperator op = assemble_mode(ctx, s, eps);
        ModeSpectrum sp = eig_mode(op);
        const auto br = match_branches(sp, m);
        for (const auto& b : br) {
          csv.row(s, eps, b.label, b.lambda.real(), b.lambda.imag(), b.predicted.real(), b.predicted.imag(), b.residual);
          auto& slot = res[pass][label_class(b.label)];
          slot = std::max(slot, b.residual);
        }
        // Dispersion roots against the eigensolve.
        DispersionContext dc(ctx, s, eps);
        RootOptions ro;
        ro.root_tol = cfg.root_tol;
        auto find = [&](int label) {
          for (const auto& b : br)
            if (b.label == label) return b.lambda;
          throw KinError("ambiguous-match", "label missing");
        };
        for (int j : {-1, 0, 1}) {
          const RootResult r0 = solve_root_D0(j, dc, ro);
          const cplx l0 = find(d0_label(j));
          const double d0 = std::abs(r0.z - l0 / eps) / (1 + std::abs(r0.z));
          root_csv.row(s, eps, "D0", j, d0_label(j), r0.z.real(), r0.z.imag(), (l0 / eps).real(), (l0 / eps).imag(), d0);
          const RootResult r1 = solve_root_D1(j, dc, ro);
          double d1 = 1e300;
          for (int lab : {d1_label(j), d1_label(j) + 1}) {
            const cplx l1 = find(lab);
            const double d = std::abs(r1.z - l1 / eps) / (1 + std::abs(r1.z));
            root_csv.row(s, eps, "D1", j, lab, r1.z.real(), r1.z.imag(), (l1 / eps).real(), (l1 / eps).imag(), d);
            d1 = std::min(d1, d);  // degenerate rotation pair: either member
          }
          for (double d : {d0, d1})
            if (d > worst_root) {
              worst_root = d;
              root_detail = "worst at s=" + short_num(s) + ", eps=" + short_num(eps) + ", index " + std::to_string(j);
            }
        }
      }
      for (int k = 0; k < 4; ++k) {
        const double ratio = res[0][k] / std::max(res[1][k], 1e-300);
        rcsv.row(kClassName[k], s, e_hi, e_lo, res[0][k], res[1][k], ratio);
        const bool ok = ratio >= 5 && ratio <= 12;
        class_ok[k] = class_ok[k] && ok;
        class_detail[k] += " s=" + short_num(s) + ": " + short_num(res[0][k]) + " -> " + short_num(res[1][k]) +
                           " (ratio " + short_num(ratio) + ")";
      }
    }
    for (int k = 0; k < 4; ++k)
      R.add(4, std::string("c4.order") + kClassName[k], "eigenvalue expansion",
            "halving ratio of |lambda - eps eta + eps^2 b| in [5, 12]", class_ok[k] ? "in band" : "out of band",
            class_ok[k], class_detail[k]);
    R.add(4, "c4.roots", "dispersion relations", "dispersion roots match eigensolve within 10 root_tol",
          short_num(worst_root), worst_root <= 10 * cfg.root_tol, root_detail);
  });

  R.guard(5, "c5.high_freq", "high-frequency eigenvalue bounds", [&] {
    const ModeContext& ctx = R.ctx(cfg.n_axis);
    auto csv = R.csv("high_freq.csv", "s,eps,j,zeta_re,zeta_im,s_neg_re,im_s_over_log,residual,eig_diff");
    const double eps = 0.5;
    const std::vector<double> ss = {50, 100, 200, 400};
    double c1 = 1e300, c2 = 0, worst_eig = 0;
    std::vector<double> im_scaled;
    bool neg = true;
    RootOptions ro;
    ro.root_tol = cfg.root_tol;
    for (double s : ss) {
      DispersionContext dc(ctx, s, eps);
      const ModeOperator op = assemble_mode(ctx, s, eps);
      ModeSpectrum sp = eig_mode(op);
      const auto hb = match_high_branches(sp);
      double im_max = 0;
      for (int j : {-1, 1}) {
        const RootResult r = solve_root_D2(j, dc, ro);
        const cplx zeta = r.z - double(j) * kI * s;
        // Labels 1, 2 belong to j = -1 and 3, 4 to j = +1.
        double ed = 1e300;
        for (const auto& b : hb)
          if ((b.label <= 2) == (j < 0)) ed = std::min(ed, std::abs(r.z - b.lambda / eps) / (1 + std::abs(r.z)));
        worst_eig = std::max(worst_eig, ed);
        const double sn = -s * zeta.real();
        const double is = std::abs(zeta.imag()) * s / std::log(eps * s);
        neg = neg && zeta.real() < 0;
        c1 = std::min(c1, sn);
        c2 = std::max(c2, sn);
        im_max = std::max(im_max, is);
        csv.row(s, eps, j, zeta.real(), zeta.imag(), sn, is, r.residual, ed);
      }
      im_scaled.push_back(im_max);
    }
    R.add(5, "c5.bounds", "high-frequency eigenvalue bounds", "C1/s <= -Re zeta <= C2/s with C1 > 0 at every sampled s",
          "C1=" + short_num(c1) + ", C2=" + short_num(c2), neg && c1 > 0);
    R.add(5, "c5.band", "high-frequency eigenvalue bounds", "s(-Re zeta) within a factor-4 band over s in [50, 400]",
          "C2/C1=" + short_num(c2 / c1), c2 / c1 <= 4,
          "s(-Re zeta) from " + short_num(c1) + " to " + short_num(c2) + " at eps=0.5");
    const double grow = im_scaled.back() / std::max(im_scaled.front(), 1e-300);
    R.add(5, "c5.im_bounded", "high-frequency eigenvalue bounds", "|Im zeta| s/ln(eps s) bounded (no growth over the sweep)",
          short_num(*std::max_element(im_scaled.begin(), im_scaled.end())), grow <= 1.5,
          "first " + short_num(im_scaled.front()) + ", last " + short_num(im_scaled.back()));
    R.add(5, "c5.eig_agreement", "high-frequency spectrum", "D2 roots match the eigensolve within 10 root_tol", short_num(worst_eig),
          worst_eig <= 10 * cfg.root_tol);
  });
}

// ---------------------------------------------------------------- semigroup

void suite_semigroup(Runner& R) {
  const auto& cfg = R.cfg;
  R.guard(6, "c6.semigroup", "semigroup decomposition", [&] {
    const auto& [c, m] = R.get(cfg.n_axis);
    const ModeContext& ctx = R.ctx(cfg.n_axis);
    auto csv = R.csv("s3.csv", "s,eps,regime,rate,recon,contraction,gauss,fallback");
    double contr = -1, recon = 0, gauss = 0;
    struct Point {
      double s;
      std::vector<double> eps;
      const char* regime;
    };
    const std::vector<Point> pts = {{0.5, {0.1, 0.05, 0.025}, "low"}, {40.0, {0.5, 0.25, 0.125}, "high"}};
    std::string detail;
    bool stable = true, positive = true;
    for (const auto& p : pts) {
      std::vector<double> rates;
      for (double e : p.eps) {
        const S3Decay d = s3_decay(ctx, m, p.s, e, 20240601u, 1, 10, R.regimes());
        csv.row(p.s, e, p.regime, d.rate, d.recon, d.max_contraction, d.gauss, d.fallback);
        contr = std::max(contr, d.max_contraction);
        recon = std::max(recon, d.recon);
        gauss = std::max(gauss, d.gauss);
        rates.push_back(d.rate);
      }
      const double lo = *std::min_element(rates.begin(), rates.end());
      const double hi = *std::max_element(rates.begin(), rates.end());
      const double mid = 0.5 * (lo + hi);
      positive = positive && lo > 0;
      stable = stable && (hi - mid) <= 0.2 * mid;
      detail += std::string(p.regime) + " s=" + short_num(p.s) + ": d in [" + short_num(lo) + ", " + short_num(hi) + "]; ";
    }
    // Contraction over a wider (s, eps, t) sample with random data.
    auto ccsv = R.csv("contraction.csv", "s,eps,t,ratio");
    unsigned seed = 11;
    for (double s : {0.05, 0.5, 2.0, 20.0, 200.0})
      for (double e : {0.1, 0.5}) {
        const ModeOperator op = assemble_mode(ctx, s, e);
        ModeSpectrum sp = eig_mode(op);
        ModePropagator prop(sp, {cfg.recon_tol});
        const CVec u0 = random_mode_vector(ctx.n_full(), seed++);
        const double n0 = weighted_norm(c, u0, s);
        double prev = n0;
        for (double t : {0.0, 0.1, 1.0, 10.0}) {
          const CVec u = prop.propagate(u0, t);
          const double nt = weighted_norm(c, u, s);
          ccsv.row(s, e, t, nt / n0);
          contr = std::max(contr, nt / n0 - 1);
          contr = std::max(contr, nt / prev - 1);
          prev = nt;
        }
      }
    R.add(6, "c6.contraction", "semigroup contraction", "||U(t)||_xi <= ||U0||_xi (1 + 1e-10) everywhere", short_num(contr),
          contr <= 1e-10);
    R.add(6, "c6.reconstruction", "semigroup decomposition", "S1+S2+S3 matches the Pade exponential within 1e-8", short_num(recon),
          recon <= 1e-8);
    R.add(6, "c6.s3_rate", "semigroup decomposition", "fitted S3 rate d > 0, stable within 20% over eps", positive && stable ? "stable" : "unstable",
          positive && stable, detail);
    R.add(6, "c6.gauss", "Gauss law", "Gauss-law residual of Q U(t) <= 1e-12", short_num(gauss), gauss <= 1e-12);
  });
}

// ---------------------------------------------------------------- limit

void write_curve(Csv& csv, const std::string& tag, double eps, const NormCurve& nc) {
  for (size_t i = 0; i < nc.t.size(); ++i) csv.row(tag, eps, nc.t[i], nc.l2[i], nc.linf[i]);
}

double sup_weighted(const NormCurve& c) {
  double s = 0;
  for (size_t i = 0; i < c.t.size(); ++i) s = std::max(s, (1 + c.t[i]) * c.linf[i]);
  return s;
}

double value_at(const NormCurve& c, double t) {
  size_t b = 0;
  for (size_t i = 0; i < c.t.size(); ++i)
    if (std::abs(std::log(c.t[i] / t)) < std::abs(std::log(c.t[b] / t))) b = i;
  return c.linf[b];
}

void suite_limit(Runner& R) {
  const auto& cfg = R.cfg;
  const int n = cfg.n_limit;
  SweepOptions so;
  so.workers = cfg.workers;
  std::vector<double> eps = cfg.eps;
  std::sort(eps.rbegin(), eps.rend());

  R.guard(7, "c7.first_order", "first-order limit", [&] {
    const auto& [c, m] = R.get(n);
    const ModeContext& ctx = R.ctx(n);
    const RadialXiGrid grid = default_radial_grid(eps.back(), cfg.shells, R.regimes());
    const InitialDataSpec wp = make_initial(DataKind::WellPrepared);
    const InitialDataSpec gen = make_initial(DataKind::Generic);
    validate_initial(c, wp, grid);
    validate_initial(c, gen, grid);
    auto csv = R.csv("limit_first.csv", "case,eps,t,l2,linf");
    std::vector<NormCurve> a, b, d;
    std::vector<double> wall;
    for (double e : eps) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto tg = make_time_grid(e);
      a.push_back(fluid_error_first_order(ctx, m, wp, e, tg, grid, false, so));
      b.push_back(fluid_error_first_order(ctx, m, gen, e, tg, grid, false, so));
      d.push_back(fluid_error_first_order(ctx, m, gen, e, tg, grid, true, so));
      wall.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      write_curve(csv, "well_prepared", e, a.back());
      write_curve(csv, "generic", e, b.back());
      write_curve(csv, "generic_layer_removed", e, d.back());
    }
    bool ok_a = true, ok_b = true, ok_d = true;
    std::string da, db, dd;
    for (size_t k = 0; k + 1 < eps.size(); ++k) {
      const std::string pair = " eps " + short_num(eps[k]) + "->" + short_num(eps[k + 1]) + ": ";
      const double ra = sup_weighted(a[k]) / sup_weighted(a[k + 1]);
      ok_a = ok_a && ra >= 1.6 && ra <= 2.5;
      da += pair + short_num(sup_weighted(a[k])) + " / " + short_num(sup_weighted(a[k + 1])) + " = " + short_num(ra);
      const double rb = b[k].linf.front() / b[k + 1].linf.front();
      ok_b = ok_b && rb >= 0.8 && rb <= 1.25;
      db += pair + short_num(b[k].linf.front()) + " / " + short_num(b[k + 1].linf.front()) + " = " + short_num(rb);
      const double rd = sup_weighted(d[k]) / sup_weighted(d[k + 1]);
      ok_d = ok_d && rd >= 1.6 && rd <= 2.5;
      dd += pair + short_num(sup_weighted(d[k])) + " / " + short_num(sup_weighted(d[k + 1])) + " = " + short_num(rd);
    }
    R.add(7, "c7.well_prepared", "first-order limit, well-prepared data", "sup_t (1+t)E(t) halving ratio in [1.6, 2.5]", ok_a ? "in band" : "out of band",
          ok_a, da);
    R.add(7, "c7.initial_layer", "first-order limit", "E(0+) ratio in [0.8, 1.25] for generic data", ok_b ? "in band" : "out of band",
          ok_b, db);
    R.add(7, "c7.layer_removed", "first-order limit, initial layer", "halving ratio in [1.6, 2.5] after removing U_osc and the P_B part",
          ok_d ? "in band" : "out of band", ok_d, dd);
    const double wmax = *std::max_element(wall.begin(), wall.end());
    R.add(7, "c7.runtime", "first-order limit", "<= 600 s per eps", short_num(wmax) + " s", wmax <= 600,
          "N=" + std::to_string(n) + ", " + std::to_string(cfg.shells) + " shells");
  });

  R.guard(8, "c8.second_order", "second-order limit", [&] {
    const auto& [c, m] = R.get(n);
    const ModeContext& ctx = R.ctx(n);
    const RadialXiGrid grid = default_radial_grid(eps.back(), cfg.shells, R.regimes());
    const InitialDataSpec mic = make_initial(DataKind::Microscopic);
    validate_initial(c, mic, grid);
    auto csv = R.csv("limit_second.csv", "case,eps,t,l2,linf");
    std::vector<NormCurve> cs, co;
    for (double e : eps) {
      cs.push_back(fluid_error_second_order(ctx, m, mic, e, make_time_grid(e), grid, so));
      co.push_back(fluid_error_second_order(ctx, m, mic, e, make_time_grid(e), grid, so, true));
      write_curve(csv, "microscopic", e, cs.back());
      write_curve(csv, "microscopic_osc_removed", e, co.back());
    }
    bool ok1 = true, ok0 = true;
    std::string d1, d0;
    for (size_t k = 0; k + 1 < eps.size(); ++k) {
      const std::string pair = " eps " + short_num(eps[k]) + "->" + short_num(eps[k + 1]) + ": ";
      const double a1 = value_at(cs[k], 1.0), b1 = value_at(cs[k + 1], 1.0);
      ok1 = ok1 && a1 / b1 >= 1.5 && a1 / b1 <= 2.6;
      d1 += pair + short_num(a1) + " / " + short_num(b1) + " = " + short_num(a1 / b1) +
            " (oscillating modes removed: " + short_num(value_at(co[k], 1.0) / value_at(co[k + 1], 1.0)) + ")";
      const double a0 = cs[k].linf.front(), b0 = cs[k + 1].linf.front();
      ok0 = ok0 && b0 / a0 >= 1.6 && b0 / a0 <= 2.5;
      d0 += pair + short_num(b0) + " / " + short_num(a0) + " = " + short_num(b0 / a0);
    }
    R.add(8, "c8.t1_ratio", "second-order limit", "error at t = 1 halving ratio in [1.5, 2.6]", ok1 ? "in band" : "out of band", ok1, d1);
    R.add(8, "c8.t0_inverse", "second-order limit", "error at t = 0+ grows like 1/eps (inverted ratio in [1.6, 2.5])",
          ok0 ? "in band" : "out of band", ok0, d0);
  });

  R.guard(9, "c9.decay", "fluid decay rates", [&] {
    const auto& [c, m] = R.get(n);
    const ModeContext& ctx = R.ctx(n);
    const RadialXiGrid grid = default_radial_grid(eps.back(), cfg.shells, R.regimes());
    const InitialDataSpec gen = make_initial(DataKind::Generic);
    const InitialDataSpec nob = make_initial(DataKind::Generic, {1.0, true});
    const InitialDataSpec mic = make_initial(DataKind::Microscopic);
    auto csv = R.csv("decay.csv", "case,eps,t,l2,linf");
    auto fcsv = R.csv("decay_fits.csv", "case,eps,exponent,stderr,t_lo,t_hi,n");
    const double d_fit = c.gap_mu / 2;
    bool ok_g = true, ok_b = true, ok_pb1 = true, ok_pb2 = true;
    std::string dg, dbz, dp1, dp2;
    std::vector<NormCurve> pb_gen, pb_mic;
    for (double e : eps) {
      // Extended to t = 1e4 so the late-window slope can be reported next to the gated window.
      const auto tg = make_time_grid(e, 1e4);
      const NormCurve pg = projected_norm(ctx, gen, e, Projector::PA, tg, grid, so);
      const NormCurve pz = projected_norm(ctx, nob, e, Projector::PA, tg, grid, so);
      pb_gen.push_back(projected_norm(ctx, gen, e, Projector::PB, tg, grid, so));
      pb_mic.push_back(projected_norm(ctx, mic, e, Projector::PB, tg, grid, so));
      write_curve(csv, "PA_generic", e, pg);
      write_curve(csv, "PA_zero_B", e, pz);
      write_curve(csv, "PB_generic", e, pb_gen.back());
      write_curve(csv, "PB_microscopic", e, pb_mic.back());
      const DecayFit fg = decay_measure(pg, e, d_fit), fz = decay_measure(pz, e, d_fit);
      fcsv.row("PA_generic", e, fg.exponent, fg.stderr_, fg.t_lo, fg.t_hi, fg.n);
      fcsv.row("PA_zero_B", e, fz.exponent, fz.stderr_, fz.t_lo, fz.t_hi, fz.n);
      ok_g = ok_g && std::abs(fg.exponent + 0.375) <= 0.05;
      ok_b = ok_b && std::abs(fz.exponent + 0.625) <= 0.05;
      const DecayFit lg = decay_measure(pg, e, d_fit, 1e3, 1e4), lz = decay_measure(pz, e, d_fit, 1e3, 1e4);
      fcsv.row("PA_generic_late", e, lg.exponent, lg.stderr_, lg.t_lo, lg.t_hi, lg.n);
      fcsv.row("PA_zero_B_late", e, lz.exponent, lz.stderr_, lz.t_lo, lz.t_hi, lz.n);
      dg += " eps " + short_num(e) + ": " + short_num(fg.exponent) + " (t in [1e3, 1e4]: " + short_num(lg.exponent) + ")";
      dbz += " eps " + short_num(e) + ": " + short_num(fz.exponent) + " (t in [1e3, 1e4]: " + short_num(lz.exponent) + ")";
    }
    for (size_t k = 0; k + 1 < eps.size(); ++k) {
      const std::string pair = " eps " + short_num(eps[k]) + "->" + short_num(eps[k + 1]) + ": ";
      const double r1 = prefactor_ratio(pb_gen[k].t, pb_gen[k].l2, pb_gen[k + 1].t, pb_gen[k + 1].l2, 5, 100);
      const double r2 = prefactor_ratio(pb_mic[k].t, pb_mic[k].l2, pb_mic[k + 1].t, pb_mic[k + 1].l2, 5, 100);
      ok_pb1 = ok_pb1 && r1 >= 1.5 && r1 <= 2.6;
      ok_pb2 = ok_pb2 && r2 >= 3.2 && r2 <= 4.9;
      dp1 += pair + short_num(r1);
      dp2 += pair + short_num(r2);
    }
    R.add(9, "c9.PA_generic", "P_A decay", "P_A exponent -0.375 +- 0.05", ok_g ? "in band" : "out of band", ok_g, dg);
    R.add(9, "c9.PA_zero_B", "P_A decay, B0 = 0", "P_A exponent -0.625 +- 0.05 for B0 = 0", ok_b ? "in band" : "out of band", ok_b, dbz);
    R.add(9, "c9.PB_first", "P_B decay", "P_B prefactor ratio in [1.5, 2.6]", ok_pb1 ? "in band" : "out of band", ok_pb1, dp1);
    R.add(9, "c9.PB_second", "P_B decay, microscopic data", "P_B prefactor ratio in [3.2, 4.9] for microscopic data",
          ok_pb2 ? "in band" : "out of band", ok_pb2, dp2);
  });

  R.guard(10, "c10.nsmf", "limit fluid system", [&] {
    const auto& [c, m] = R.get(n);
    auto csv = R.csv("nsmf.csv", "mode,s,t,distance,closed_m,closed_theta");
    std::mt19937_64 gen(424242);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ls(std::log(0.05), std::log(5.0));
    const std::vector<double> times = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
    OdeOptions oo;
    oo.ode_tol = cfg.ode_tol;
    double worst = 0, worst_closed = 0;
    const int nv = c.size();
    for (int k = 0; k < 20; ++k) {
      const double s = std::exp(ls(gen));
      // Random macroscopic f0 and transverse fields with curl B0 = m0 (the compatible class).
      std::array<cplx, 5> a;
      for (auto& x : a) {
        const double re = u(gen);
        const double im = u(gen);
        x = cplx(re, im);
      }
      std::array<cplx, 2> eperp, bperp;
      for (auto* arr : {&eperp, &bperp})
        for (auto& x : *arr) {
          const double re = u(gen);
          const double im = u(gen);
          x = cplx(re, im);
        }
      CVec phys = CVec::Zero(nv + kPhysFields);
      // m = i s ω×B: m2 = -i s B3, m3 = i s B2
      a[2] = -kI * s * bperp[1];
      a[3] = kI * s * bperp[0];
      for (int j = 0; j < 5; ++j) phys.head(nv) += a[j] * c.chi.col(j).cast<cplx>();
      phys(nv) = -kI * a[0] / s;
      phys(nv + 1) = eperp[0];
      phys(nv + 2) = eperp[1];
      phys(nv + 4) = bperp[0];
      phys(nv + 5) = bperp[1];
      const CVec v0 = project_PA(c, to_mode_layout(c, phys));
      const FluidModeSemigroup fsg = make_fluid_semigroup(c, m, s);
      const NsmfState init = nsmf_initial(c, v0, s);
      const auto traj = nsmf_ode_solve(m, init, s, times, oo);
      const cplx th0 = init.q - std::sqrt(2.0 / 3) * init.n;
      for (size_t i = 0; i < times.size(); ++i) {
        const NsmfState y1 = nsmf_from_physical(c, nsmf_mode_apply(fsg, v0, times[i]), times[i]);
        const double dist = nsmf_distance(traj[i], y1);
        // Closed forms: m(t) = e^{-b2 t} m(0), θ(t) = e^{-b0 t} θ(0).
        const double em = std::abs(traj[i].m[1] - std::exp(-fsg.b[1] * times[i]) * init.m[1]) /
                          std::max(std::abs(init.m[1]), 1e-300);
        const cplx th = traj[i].q - std::sqrt(2.0 / 3) * traj[i].n;
        const double et = std::abs(th - std::exp(-fsg.b[0] * times[i]) * th0) / std::max(std::abs(th0), 1e-300);
        csv.row(k, s, times[i], dist, em, et);
        worst = std::max(worst, dist);
        worst_closed = std::max({worst_closed, em, et});
      }
    }
    R.add(10, "c10.semigroup_vs_ode", "limit fluid system", "Y1 and ODE trajectories agree to 1e-7 on 20 random modes",
          short_num(worst), worst <= 1e-7);
    R.add(10, "c10.closed_form", "limit fluid closed forms", "e^{-b2 t}, e^{-b0 t} factors matched to ode_tol", short_num(worst_closed),
          worst_closed <= cfg.ode_tol);
  });
}

// ---------------------------------------------------------------- kernels

std::vector<double> log_times(double lo, double hi, int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = lo * std::pow(hi / lo, double(k) / (n - 1));
  return t;
}

void suite_kernels(Runner& R) {
  auto csv = R.csv("kernels.csv", "kind,d,m,j,a,p,t,norm");
  auto fcsv = R.csv("kernel_fits.csv", "name,exponent,stderr,expected,tolerance");
  auto fit_one = [&](const std::string& name, const SymbolSpec& sp, double p, const std::vector<double>& ts,
                     const std::function<double(double)>& f, double expected, double tol, const char* ref,
                     const std::string& detail = "", double min_decades = 1.5) {
    std::vector<std::pair<double, double>> samples;
    for (double t : ts) {
      const double v = f(t);
      csv.row(symbol_kind_name(sp.kind), sp.d, sp.m, sp.j, sp.a, std::isinf(p) ? std::string("inf") : num(p), t, v);
      samples.emplace_back(t, v);
    }
    const FitResult fr = fit_exponent(samples, min_decades);
    fcsv.row(name, fr.exponent, fr.stderr_, expected, tol);
    R.add(11, "c11." + name, ref,
          "exponent " + short_num(expected) + " +- " + short_num(tol) + " over t in [" + short_num(ts.front()) + ", " +
              short_num(ts.back()) + "]",
          short_num(fr.exponent), std::abs(fr.exponent - expected) <= tol, detail);
  };
  const double inf = std::numeric_limits<double>::infinity();
  R.guard(11, "c11.heat", "heat-type kernel decay", [&] {
    SymbolSpec sp;
    sp.kind = SymbolKind::Quadratic;
    fit_one("heat_inf", sp, inf, log_times(1, 1e3, 10), [&](double t) { return kernel_lp_norm(sp, t, inf); }, -1.5,
            0.02, "heat-type kernel decay");
    fit_one("heat_p2", sp, 2, log_times(1, 1e3, 8), [&](double t) { return kernel_lp_norm(sp, t, 2); }, -0.75, 0.02,
            "heat-type kernel decay");
    SymbolSpec sm = sp;
    sm.m = 2;
    fit_one("heat_m2_inf", sm, inf, log_times(1, 1e3, 10), [&](double t) { return kernel_lp_norm(sm, t, inf); }, -2.5,
            0.02, "heat-type kernel decay");
    // Exact scaling of the pure-power symbol and the Plancherel anchor.
    const double r = kernel_lp_norm(sm, 8.0, inf) / kernel_lp_norm(sm, 2.0, inf);
    R.add(11, "c11.heat_scaling", "heat-type kernel decay", "t x4 scales the L-inf norm by 4^{-(3+m)/2}", short_num(r),
          std::abs(r / std::pow(4.0, -2.5) - 1) <= 1e-8);
    const double l2 = kernel_lp_norm(sp, 3.0, 2), pl = kernel_plancherel(sp, 3.0);
    R.add(11, "c11.plancherel", "heat-type kernel decay", "p = 2 norm equals the Plancherel value within 1e-8", short_num(rel(l2, pl)),
          rel(l2, pl) <= 1e-8);
  });
  R.guard(11, "c11.mixed", "mixed-symbol kernel decay", [&] {
    SymbolSpec sp;
    sp.kind = SymbolKind::Mixed;
    const auto ts = log_times(1, 1e3, 10);
    for (auto [m, j] : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}}) {
      sp.m = m;
      sp.j = j;
      // Diagnostic only: the same fit far out in time, where the s^6 correction of the symbol has died out.
      std::vector<std::pair<double, double>> late;
      for (double t : log_times(1e4, 1e6, 8)) late.emplace_back(t, kernel_lp_norm(sp, t, inf));
      fit_one("mixed_m" + std::to_string(m) + "_j" + std::to_string(j) + "_inf", sp, inf, ts,
              [&](double t) { return kernel_lp_norm(sp, t, inf); }, -(3.0 + m + j) / 4, 0.05, "mixed-symbol kernel decay",
              "fit over [1e4, 1e6]: " + short_num(fit_exponent(late).exponent));
    }
  });
  R.guard(11, "c11.dispersive", "dispersive kernel decay", [&] {
    SymbolSpec sp;
    sp.kind = SymbolKind::Dispersive;
    sp.a = 1.25;
    // The pinned window [5, 50] is one decade, so the span guard is relaxed to match it.
    fit_one("disp_inf", sp, inf, log_times(5, 50, 8), [&](double t) { return dispersive_lp_norm(1.25, t, inf); }, -1.5,
            0.1, "dispersive kernel decay", "", 1.0);
    fit_one("disp_p2", sp, 2, log_times(5, 50, 6), [&](double t) { return dispersive_lp_norm(1.25, t, 2); }, 0.0, 0.05,
            "dispersive kernel decay", "", 1.0);
    double prev = 1e300;
    bool mono = true;
    std::string d;
    for (double a : {1.25, 1.5, 2.0, 3.0}) {
      const double v = dispersive_lp_norm(a, 10.0, inf);
      mono = mono && v <= prev * (1 + 1e-9);
      prev = v;
      d += " a=" + short_num(a) + ": " + short_num(v);
    }
    R.add(11, "c11.disp_monotone", "dispersive kernel decay", "norm non-increasing in a at t = 10", mono ? "monotone" : "not monotone",
          mono, d);
  });
}

}  // namespace

ExperimentRecord run_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  set_blas_single_thread();
  ExperimentRecord rec;
  rec.config_json = config_to_json(cfg);
  rec.started = timestamp();
  Runner R{cfg, rec, fs::path(cfg.out_dir), {}, {}};
  fs::create_directories(R.out);
  const std::string& s = cfg.suite;
  const bool all = s == "all";
  if (all || s == "spectrum") suite_spectrum(R);
  if (all || s == "expansion") suite_expansion(R);
  if (all || s == "semigroup") suite_semigroup(R);
  if (all || s == "limit") suite_limit(R);
  if (all || s == "kernels") suite_kernels(R);
  rec.finished = timestamp();
  return rec;
}

std::string emit_report(const ExperimentRecord& rec, const std::string& out_dir) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  std::ostringstream md;
  int fails = 0;
  for (const auto& c : rec.checks) fails += !c.pass;
  md << "# Verification report\n\n";
  md << "Started " << rec.started << ", finished " << rec.finished << ". ";
  md << rec.checks.size() << " checks, " << fails << " failed.\n\n";
  md << "| criterion | check | reference | expectation | measured | verdict | detail |\n";
  md << "|---|---|---|---|---|---|---|\n";
  auto esc = [](std::string x) {
    for (auto& ch : x)
      if (ch == '|') ch = '/';
    return x;
  };
  for (const auto& c : rec.checks)
    md << "| " << c.criterion << " | " << esc(c.id) << " | " << esc(c.ref) << " | " << esc(c.expectation) << " | "
       << esc(c.measured) << " | " << (c.pass ? "PASS" : "FAIL") << " | " << esc(c.detail) << " |\n";
  const fs::path rp = out / "report.md";
  std::ofstream(rp) << md.str();

  json man;
  man["config"] = rec.config_json.empty() ? json::object() : json::parse(rec.config_json);
  man["started"] = rec.started;
  man["finished"] = rec.finished;
  man["files"] = rec.files;
  json checks = json::array();
  for (const auto& c : rec.checks)
    checks.push_back({{"criterion", c.criterion},
                      {"id", c.id},
                      {"ref", c.ref},
                      {"expectation", c.expectation},
                      {"measured", c.measured},
                      {"pass", c.pass},
                      {"detail", c.detail}});
  man["checks"] = checks;
  std::ofstream(out / "manifest.json") << man.dump(2) << '\n';
  return rp.string();
}

}  // namespace kinspec
