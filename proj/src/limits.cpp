#include "kinspec/limits.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

namespace kinspec {

std::vector<double> make_time_grid(double eps, double t_max, int per_decade) {
  if (!(eps > 0) || !(t_max > 0) || per_decade < 1) throw KinError("config", "bad time grid parameters");
  const double t0 = eps * eps * 1e-2;
  if (!(t_max > t0)) throw KinError("config", "t_max below the first time");
  const int n = static_cast<int>(std::ceil(std::log10(t_max / t0) * per_decade));
  std::vector<double> t(n + 1);
  for (int k = 0; k <= n; ++k) t[k] = t0 * std::pow(t_max / t0, double(k) / n);
  t[n] = t_max;
  return t;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace {

struct ShellOut {
  std::vector<double> norms;
  bool fallback = false;
  double contraction = -1;
};

struct ShellSolver {
  ModeOperator op;
  ModeSpectrum spec;
  std::unique_ptr<ModePropagator> prop;
  ShellSolver(const ModeContext& ctx, double s, double eps) : op(assemble_mode(ctx, s, eps)) {
    spec = eig_mode(op);
    prop = std::make_unique<ModePropagator>(spec);
  }
};

template <class F>
NormCurve sweep(const ModeContext& ctx, const InitialDataSpec& data, const std::vector<double>& times,
                const RadialXiGrid& grid, const SweepOptions& so, F shell_fn) {
  const CollisionMatrices& c = *ctx.coll;
  const int ns = grid.size();
  std::vector<double> dnorm(ns);
  double dmax = 0;
  for (int k = 0; k < ns; ++k) {
    dnorm[k] = weighted_norm(c, data.mode(c, grid.s[k]), grid.s[k]);
    dmax = std::max(dmax, dnorm[k]);
  }
  std::vector<ShellOut> outs(ns);
  parallel_for(ns, so.workers, [&](int k) {
    if (dnorm[k] <= so.skip_tol * dmax) {
      outs[k].norms.assign(times.size(), 0.0);
      return;
    }
    outs[k] = shell_fn(grid.s[k]);
  });
  NormCurve nc;
  nc.t = times;
  std::vector<double> col(ns);
  for (size_t i = 0; i < times.size(); ++i) {
    for (int k = 0; k < ns; ++k) col[k] = outs[k].norms[i];
    const GlobalNorms g = global_norms(grid, col);
    nc.l2.push_back(g.l2);
    nc.linf.push_back(g.linf);
    nc.coverage_warning = nc.coverage_warning || g.coverage_warning;
  }
  for (const auto& o : outs) {
    nc.fallback_used = nc.fallback_used || o.fallback;
    nc.max_contraction = std::max(nc.max_contraction, o.contraction);
  }
  return nc;
}

}  // namespace

NormCurve fluid_error_first_order(const ModeContext& ctx, const MacroMoments& mm, const InitialDataSpec& data,
                                  double eps, const std::vector<double>& times, const RadialXiGrid& grid,
                                  bool subtract_layer, const SweepOptions& so) {
  const CollisionMatrices& c = *ctx.coll;
  return sweep(ctx, data, times, grid, so, [&](double s) {
    ShellSolver sh(ctx, s, eps);
    const FluidModeSemigroup fs = make_fluid_semigroup(c, mm, s);
    const CVec u0 = data.mode(c, s);
    const CVec pa = project_PA(c, u0);
    const CVec& base = subtract_layer ? pa : u0;
    const double n0 = weighted_norm(c, base, s);
    const auto ex = sh.prop->propagate_many(base, times);
    ShellOut o;
    o.fallback = sh.prop->any_fallback();
    for (size_t i = 0; i < times.size(); ++i) {
      CVec diff = ex[i] - fs.apply_tilde(pa, times[i]);
      if (subtract_layer) diff -= oscillation_part(c, mm, pa, times[i], s, eps);
      o.norms.push_back(weighted_norm(c, diff, s));
      o.contraction = std::max(o.contraction, weighted_norm(c, ex[i], s) / n0 - 1);
    }
    return o;
  });
}

NormCurve fluid_error_second_order(const ModeContext& ctx, const MacroMoments& mm, const InitialDataSpec& data,
                                   double eps, const std::vector<double>& times, const RadialXiGrid& grid,
                                   const SweepOptions& so, bool subtract_osc) {
  const CollisionMatrices& c = *ctx.coll;
  const int nv = c.size();
  return sweep(ctx, data, times, grid, so, [&](double s) {
    const CVec u0 = data.mode(c, s);
    const CVec f0 = u0.head(nv);
    if (c.project_P0(f0).norm() > 1e-10 * f0.norm())
      throw KinError("invalid-input", "second-order limit needs P0 f0 = 0");
    if (u0.tail(kFieldCount).norm() > 0) throw KinError("invalid-input", "second-order limit needs E0 = B0 = 0");
    ShellSolver sh(ctx, s, eps);
    const FluidModeSemigroup fs = make_fluid_semigroup(c, mm, s);
    // Z0 = (P0(i s v1 L⁻¹ f0), 0, 0), taken part by part since L⁻¹ acts on real vectors.
    const Vec gr = c.solve_Linv_P1(f0.real()), gi = c.solve_Linv_P1(f0.imag());
    CVec z0 = CVec::Zero(u0.size());
    z0.head(nv) = kI * s *
                  (c.project_P0(c.times_v(0, gr)).cast<cplx>() + kI * c.project_P0(c.times_v(0, gi)).cast<cplx>());
    const auto ex = sh.prop->propagate_many(u0, times);
    const double n0 = weighted_norm(c, u0, s);
    ShellOut o;
    o.fallback = sh.prop->any_fallback();
    for (size_t i = 0; i < times.size(); ++i) {
      CVec diff = ex[i] / eps - fs.apply_tilde(z0, times[i]);
      if (subtract_osc) diff -= oscillation_part(c, mm, z0, times[i], s, eps);
      o.norms.push_back(weighted_norm(c, diff, s));
      if (n0 > 0) o.contraction = std::max(o.contraction, weighted_norm(c, ex[i], s) / n0 - 1);
    }
    return o;
  });
}

NormCurve projected_norm(const ModeContext& ctx, const InitialDataSpec& data, double eps, Projector proj,
                         const std::vector<double>& times, const RadialXiGrid& grid, const SweepOptions& so) {
  const CollisionMatrices& c = *ctx.coll;
  return sweep(ctx, data, times, grid, so, [&](double s) {
    ShellSolver sh(ctx, s, eps);
    const CVec u0 = data.mode(c, s);
    const auto ex = sh.prop->propagate_many(u0, times);
    const double n0 = weighted_norm(c, u0, s);
    ShellOut o;
    o.fallback = sh.prop->any_fallback();
    for (size_t i = 0; i < times.size(); ++i) {
      const CVec pu = proj == Projector::PA ? project_PA(c, ex[i]) : project_PB(c, ex[i]);
      o.norms.push_back(weighted_norm(c, pu, s));
      o.contraction = std::max(o.contraction, weighted_norm(c, ex[i], s) / n0 - 1);
    }
    return o;
  });
}

DecayFit decay_measure(const NormCurve& c, double eps, double d_fit, double t_lo, double t_hi) {
  const double t_cut = std::max(t_lo, 10 * eps * eps / d_fit);
  std::vector<double> x, y;
  for (size_t i = 0; i < c.t.size(); ++i)
    if (c.t[i] >= t_cut && c.t[i] <= t_hi && c.l2[i] > 0) {
      x.push_back(1 + c.t[i]);
      y.push_back(c.l2[i]);
    }
  if (x.size() < 6) throw KinError("fit-window-too-short", "fewer than 6 samples in the fit window");
  const FitResult fr = loglog_fit(x, y);
  DecayFit df;
  df.exponent = fr.exponent;
  df.stderr_ = fr.stderr_;
  df.t_lo = t_cut;
  df.t_hi = t_hi;
  df.n = fr.n;
  return df;
}

double prefactor_ratio(const std::vector<double>& ta, const std::vector<double>& a, const std::vector<double>& tb,
                       const std::vector<double>& b, double t_lo, double t_hi) {
  // Both curves are sampled at the window times by log-log interpolation.
  auto interp = [](const std::vector<double>& t, const std::vector<double>& v, double x) {
    auto it = std::lower_bound(t.begin(), t.end(), x);
    if (it == t.begin()) return v.front();
    if (it == t.end()) return v.back();
    const size_t k = static_cast<size_t>(it - t.begin());
    const double w = std::log(x / t[k - 1]) / std::log(t[k] / t[k - 1]);
    return std::exp((1 - w) * std::log(v[k - 1]) + w * std::log(v[k]));
  };
  double acc = 0;
  const int n = 41;
  for (int k = 0; k < n; ++k) {
    const double x = t_lo * std::pow(t_hi / t_lo, double(k) / (n - 1));
    acc += std::log(interp(ta, a, x) / interp(tb, b, x));
  }
  return std::exp(acc / n);
}

CVec random_mode_vector(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVec v(n);
  for (int k = 0; k < n; ++k) {
    const double re = u(gen);
    const double im = u(gen);
    v(k) = cplx(re, im);
  }
  return v;
}

S3Decay s3_decay(const ModeContext& ctx, const MacroMoments& mm, double s, double eps, unsigned seed,
                 double tau_lo, double tau_hi, const Regimes& reg) {
  const CollisionMatrices& c = *ctx.coll;
  ShellSolver sh(ctx, s, eps);
  std::vector<SpectralBranch> low, high;
  if (eps * s <= reg.r0) low = match_branches(sh.spec, mm);
  if (eps * s >= reg.r1) high = match_high_branches(sh.spec);
  const CVec u0 = random_mode_vector(ctx.n_full(), seed);
  const double n0 = weighted_norm(c, u0, s);
  S3Decay out;
  out.fallback = sh.prop->any_fallback();
  std::vector<double> x, y;
  const int n = 30;
  for (int k = 0; k < n; ++k) {
    const double tau = tau_lo + (tau_hi - tau_lo) * k / (n - 1);
    const double t = tau * eps * eps;
    const S123 d = decompose_S123(*sh.prop, low, high, u0, t, reg);
    const CVec exact = sh.prop->propagate(u0, t);
    out.max_contraction = std::max(out.max_contraction, weighted_norm(c, exact, s) / n0 - 1);
    out.gauss = std::max(out.gauss, gauss_residual(c, q_map(c, exact, s), s));
    if (k % 10 == 0) {
      // Reconstruction against the Padé exponential, which does not use the eigensystem.
      const CVec ref = sh.prop->propagate_pade(u0, t);
      out.recon = std::max(out.recon, (d.s1 + d.s2 + d.s3 - ref).norm() / std::max(ref.norm(), 1e-300));
    }
    x.push_back(tau);
    y.push_back(std::log(weighted_norm(c, d.s3, s) / n0));
  }
  double mx = 0, my = 0;
  for (int k = 0; k < n; ++k) {
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  out.rate = -sxy / sxx;
  return out;
}

}  // namespace kinspec
