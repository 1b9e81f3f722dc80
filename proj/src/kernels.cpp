#include "kinspec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace kinspec {

namespace {

constexpr int kGL = 20;

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
  GaussRule() {
    using G = boost::math::quadrature::gauss<double, kGL>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (size_t k = 0; k < a.size(); ++k) {
      x.push_back(a[k]);
      w.push_back(wt[k]);
      if (a[k] != 0) {
        x.push_back(-a[k]);
        w.push_back(wt[k]);
      }
    }
  }
};

const GaussRule& gauss_rule() {
  static const GaussRule r;
  return r;
}

/// ∫_lo^hi f with `panels` equal Gauss-Legendre panels.
template <class F>
auto panel_integrate(F f, double lo, double hi, int panels) -> decltype(f(0.0)) {
  const GaussRule& g = gauss_rule();
  using R = decltype(f(0.0));
  R acc = R(0);
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = lo + (p + 0.5) * h;
    R part = R(0);
    for (size_t k = 0; k < g.x.size(); ++k) part += g.w[k] * f(c + 0.5 * h * g.x[k]);
    acc += 0.5 * h * part;
  }
  return acc;
}

double symbol_weight(const SymbolSpec& sp, double s, double t) {
  if (sp.kind == SymbolKind::Quadratic) return std::pow(s, sp.m) * std::exp(-s * s * t);
  const double s2 = s * s;
  return std::pow(s, sp.m + sp.j) * std::exp(-s2 * s2 / (1 + s2) * t) * smooth_cutoff(s);
}

double symbol_support(const SymbolSpec& sp, double t) {
  if (sp.kind == SymbolKind::Mixed) return 2.0;
  return std::sqrt(110.0 / t) * (1 + 0.1 * sp.m);
}

void check_spec(const SymbolSpec& sp, double t, double p) {
  if (sp.d != 3) throw KinError("config", "radial reduction is implemented for d = 3");
  if (sp.kind == SymbolKind::Dispersive) throw KinError("config", "use dispersive_lp_norm for the dispersive kind");
  if (sp.m < 0 || sp.j < 0 || sp.j > 1) throw KinError("config", "need m >= 0 and j in {0, 1}");
  if (!(t > 0)) throw KinError("config", "t must be positive");
  if (!(p >= 1)) throw KinError("config", "p must lie in [1, inf]");
}

/// G(r) = 4π ∫ s² w(s) sin(sr)/(sr) ds.
double radial_kernel(const SymbolSpec& sp, double t, double r) {
  const double smax = symbol_support(sp, t);
  const int panels = 32 + static_cast<int>(std::ceil(smax * r / 2));
  auto f = [&](double s) {
    const double x = s * r;
    const double sinc = x < 1e-8 ? 1.0 - x * x / 6 : std::sin(x) / x;
    return s * s * symbol_weight(sp, s, t) * sinc;
  };
  return 4 * kPi * panel_integrate(f, 0.0, smax, panels);
}

/// (∫_0^∞ 4π r² |g(r)|^p dr)^{1/p} by composite Gauss rules on doubling segments, with panel width h.
/// Fixed rules: far-tail values are rounding noise, which adaptive relative error control would refine forever.
template <class G>
double radial_lp(G g, double p, double r0, double h) {
  auto integrand = [&](double r) { return 4 * kPi * r * r * std::pow(std::abs(g(r)), p); };
  auto seg = [&](double lo, double hi) {
    return panel_integrate(integrand, lo, hi, std::max(1, static_cast<int>(std::ceil((hi - lo) / h))));
  };
  double total = seg(0.0, r0), lo = r0, hi = 2 * r0;
  for (int k = 0; k < 60; ++k) {
    const double part = seg(lo, hi);
    total += part;
    if (part <= 1e-16 * total) return std::pow(total, 1 / p);
    lo = hi;
    hi *= 2;
  }
  throw KinError("quadrature-nonconvergence", "radial L^p integral did not settle");
}

}  // namespace

const char* symbol_kind_name(SymbolKind k) {
  switch (k) {
    case SymbolKind::Quadratic: return "quadratic";
    case SymbolKind::Mixed: return "mixed";
    case SymbolKind::Dispersive: return "dispersive";
  }
  return "?";
}

double smooth_cutoff(double s) {
  auto psi = [](double x) { return x > 0 ? std::exp(-1 / x) : 0.0; };
  if (s <= 1) return 1.0;
  if (s >= 2) return 0.0;
  const double a = psi(2 - s), b = psi(s - 1);
  return a / (a + b);
}

double kernel_lp_norm(const SymbolSpec& spec, double t, double p) {
  check_spec(spec, t, p);
  // The weight is non-negative, so |G| peaks at the origin.
  if (std::isinf(p)) return radial_kernel(spec, t, 0.0);
  const double r0 = 8.0 / symbol_support(spec, t) + 1.0;
  return radial_lp([&](double r) { return radial_kernel(spec, t, r); }, p, r0, 1.0 / symbol_support(spec, t));
}

double kernel_plancherel(const SymbolSpec& spec, double t) {
  check_spec(spec, t, 2);
  const double smax = symbol_support(spec, t);
  auto f = [&](double s) {
    const double w = symbol_weight(spec, s, t);
    return s * s * w * w;
  };
  return std::pow(2 * kPi, 1.5) * std::sqrt(4 * kPi * panel_integrate(f, 0.0, smax, 256));
}

namespace {

/// ∫ along s = s0 + dir·i·y, y ∈ [0, ∞), of g(s) ds.
cplx ray_integral(const std::function<cplx(cplx)>& g, double s0, double dir) {
  boost::math::quadrature::exp_sinh<double> es;
  const cplx ds = dir * kI;
  auto re = [&](double y) { return (g(cplx(s0, dir * y)) * ds).real(); };
  auto im = [&](double y) { return (g(cplx(s0, dir * y)) * ds).imag(); };
  return cplx(es.integrate(re, 1e-12), es.integrate(im, 1e-12));
}

}  // namespace

cplx dispersive_kernel(double a, double t, double r, const DispersiveOptions& opts) {
  if (a < 1.25) throw KinError("config", "dispersive bound needs a >= 5/4");
  if (!(t > 0)) throw KinError("config", "t must be positive");
  if (t > opts.t_max) throw KinError("oscillation-budget", "t beyond t_max");
  const double S = opts.s_split;
  // All exponentials share one exp() so that e^{±isr} and e^{-i⟨s⟩t} never overflow separately far out on a ray.
  auto expo = [&](cplx s, double rr) {
    const cplx q = 1.0 + s * s;
    const cplx e = std::exp(-kI * std::sqrt(q) * t + kI * s * rr - a * std::log(q));
    return std::isfinite(e.real()) && std::isfinite(e.imag()) ? e : cplx(0);
  };
  auto base = [&](cplx s) { return expo(s, 0.0); };
  const int panels = 16 + static_cast<int>(std::ceil(S * (r + t) / 2));
  if (r < 1e-6) {
    // 4π ∫ s² e^{-i⟨s⟩t}⟨s⟩^{-2a} ds, tail rotated into the lower half plane.
    auto g = [&](cplx s) { return s * s * base(s); };
    cplx head = panel_integrate([&](double s) { return g(cplx(s, 0)); }, 0.0, S, panels);
    return 4 * kPi * (head + ray_integral(g, S, -1));
  }
  // sin(sr) = (e^{isr} - e^{-isr})/(2i); each exponential gets its own decaying contour.
  auto gp = [&](cplx s) { return s * expo(s, r) / (2.0 * kI); };
  auto gm = [&](cplx s) { return s * expo(s, -r) / (2.0 * kI); };
  auto full = [&](double s) { return s * std::sin(s * r) * base(cplx(s, 0)); };
  const cplx head = panel_integrate(full, 0.0, S, panels);
  const cplx tail = ray_integral(gp, S, r <= t ? -1 : 1) - ray_integral(gm, S, -1);
  return 4 * kPi / r * (head + tail);
}

double dispersive_lp_norm(double a, double t, double p, const DispersiveOptions& opts) {
  if (!(p >= 2)) throw KinError("config", "p must lie in [2, inf]");
  if (std::isinf(p)) {
    const double rmax = 1.5 * t + 10;
    const int n = opts.r_samples;
    double best = 0, rbest = 0;
    for (int k = 0; k <= n; ++k) {
      const double r = rmax * k / n;
      const double v = std::abs(dispersive_kernel(a, t, r, opts));
      if (v > best) {
        best = v;
        rbest = r;
      }
    }
    // Golden-section refinement around the best sample.
    double lo = std::max(0.0, rbest - rmax / n), hi = std::min(rmax, rbest + rmax / n);
    const double gr = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 40; ++it) {
      const double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      if (std::abs(dispersive_kernel(a, t, x1, opts)) > std::abs(dispersive_kernel(a, t, x2, opts)))
        hi = x2;
      else
        lo = x1;
    }
    return std::max(best, std::abs(dispersive_kernel(a, t, 0.5 * (lo + hi), opts)));
  }
  // Fixed composite Gauss rule: K carries ~1e-11 contour-quadrature noise that stalls adaptive error control.
  // Past the wave front K decays exponentially in r - t, so [0, t + 40] holds everything above 1e-15.
  const double rmax = t + 40;
  auto f = [&](double r) { return 4 * kPi * r * r * std::pow(std::abs(dispersive_kernel(a, t, r, opts)), p); };
  return std::pow(panel_integrate(f, 0.0, rmax, static_cast<int>(std::ceil(4 * rmax))), 1 / p);
}

FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw KinError("insufficient-span", "need at least two samples");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  std::vector<double> lx(n), ly(n);
  for (int k = 0; k < n; ++k) {
    if (!(x[k] > 0) || !(y[k] > 0)) throw KinError("config", "log-log fit needs positive samples");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
    sx += lx[k];
    sy += ly[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  FitResult fr;
  fr.n = n;
  fr.exponent = sxy / sxx;
  fr.intercept = my - fr.exponent * mx;
  double ss = 0;
  for (int k = 0; k < n; ++k) {
    const double e = ly[k] - fr.intercept - fr.exponent * lx[k];
    ss += e * e;
  }
  fr.stderr_ = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return fr;
}

FitResult fit_exponent(const std::vector<std::pair<double, double>>& samples, double min_decades) {
  if (samples.size() < 6) throw KinError("insufficient-span", "need at least 6 samples");
  std::vector<double> x, y;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& [t, v] : samples) {
    x.push_back(t);
    y.push_back(v);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!(lo > 0) || std::log10(hi / lo) < min_decades - 1e-12)
    throw KinError("insufficient-span", "samples span too few decades");
  return loglog_fit(x, y);
}

}  // namespace kinspec
