#include "kinspec/field.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include <boost/numeric/odeint.hpp>

namespace kinspec {

RadialXiGrid make_radial_grid(double smin, double smax, int n) {
  if (!(smin > 0) || !(smax > smin) || n < 2) throw KinError("config", "radial grid needs 0 < smin < smax and n >= 2");
  RadialXiGrid g;
  const double h = std::log(smax / smin) / (n - 1);
  for (int k = 0; k < n; ++k) {
    const double s = smin * std::exp(h * k);
    g.s.push_back(s);
    g.w.push_back(s * h * ((k == 0 || k == n - 1) ? 0.5 : 1.0));
  }
  return g;
}

RadialXiGrid default_radial_grid(double eps_min, int n, const Regimes& reg) {
  return make_radial_grid(1e-2, std::max(20.0, 2 * reg.r1 / eps_min), n);
}

const char* data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::WellPrepared: return "well_prepared";
    case DataKind::Generic: return "generic";
    case DataKind::Microscopic: return "microscopic";
  }
  return "?";
}

DataKind data_kind_from_name(const std::string& name) {
  if (name == "well_prepared") return DataKind::WellPrepared;
  if (name == "generic") return DataKind::Generic;
  if (name == "microscopic") return DataKind::Microscopic;
  throw KinError("config", "unknown data kind " + name);
}

namespace {

CVec micro_structure(const CollisionMatrices& c, int j) {
  return c.project_P1(c.times_v(0, c.chi.col(j))).cast<cplx>();
}

}  // namespace

CVec InitialDataSpec::physical(const CollisionMatrices& c, double s) const {
  if (!(s > 0)) throw KinError("config", "initial data need s > 0");
  const int nv = c.size();
  const double rho = profile(s);
  CVec u = CVec::Zero(nv + kPhysFields);
  auto chi = [&](int k) { return CVec(c.chi.col(k).cast<cplx>()); };
  cplx nn = n, qq = q;
  std::array<cplx, 3> mm = {m[0], m[1], m[2]};
  std::array<cplx, 2> ee = {e[0], e[1]};
  if (kind == DataKind::WellPrepared) {
    // (1 + s⁻²) n + √(2/3) q = 0, m = i s ω×B, E a pure gradient.
    nn = -std::sqrt(2.0 / 3) * s * s / (1 + s * s) * q;
    mm = {0.0, -kI * s * b[1], kI * s * b[0]};
    ee = {0.0, 0.0};
  } else {
    // n̂ = n s keeps Ê1 = -i n̂/s bounded at the origin, so E0 lies in L¹.
    nn = n * s;
  }
  u.head(nv) = nn * chi(0) + mm[0] * chi(1) + mm[1] * chi(2) + mm[2] * chi(3) + qq * chi(4);
  if (micro2 != 0) u.head(nv) += micro2 * micro_structure(c, 2);
  if (micro4 != 0) u.head(nv) += micro4 * micro_structure(c, 4);
  u.head(nv) *= rho;
  const cplx dens = chi(0).dot(u.head(nv));
  u(nv + 0) = -kI * dens / s;
  u(nv + 1) = ee[0] * rho;
  u(nv + 2) = ee[1] * rho;
  u(nv + 3) = 0;
  u(nv + 4) = b[0] * rho;
  u(nv + 5) = b[1] * rho;
  return u;
}

CVec InitialDataSpec::mode(const CollisionMatrices& c, double s) const { return to_mode_layout(c, physical(c, s)); }

InitialDataSpec make_initial(DataKind kind, const DataParams& p) {
  if (!(p.width > 0)) throw KinError("config", "profile width must be positive");
  InitialDataSpec d;
  d.kind = kind;
  d.width = p.width;
  switch (kind) {
    case DataKind::WellPrepared:
      d.q = 1.0;
      d.b = {0.6, 0.8};
      break;
    case DataKind::Generic:
      d.n = 1.0;
      d.m = {0.6, 0.8, -0.5};
      d.q = 0.7;
      d.micro2 = 0.3;
      d.micro4 = 0.2;
      d.e = {0.4, -0.3};
      d.b = {0.5, 0.6};
      break;
    case DataKind::Microscopic:
      d.micro2 = 1.0;
      break;
  }
  if (p.zero_b) d.b = {0.0, 0.0};
  if (kind == DataKind::WellPrepared && p.zero_b) throw KinError("constraint-violation", "well-prepared data need B0 != 0 to carry momentum");
  return d;
}

ConstraintReport check_constraints(const CollisionMatrices& c, const InitialDataSpec& d, double s) {
  const int nv = c.size();
  const CVec u = d.physical(c, s);
  ConstraintReport r;
  r.gauss = gauss_residual(c, u, s);
  r.div_b = std::abs(u(nv + 3));
  const CVec f = u.head(nv);
  if (d.kind == DataKind::Microscopic) {
    const double fn = f.norm();
    r.micro_p0 = fn > 0 ? c.project_P0(f).norm() / fn : 0.0;
  }
  if (d.kind == DataKind::WellPrepared) {
    auto mom = [&](int k) { return CVec(c.chi.col(k).cast<cplx>()).dot(f); };
    const cplx n = mom(0), q = mom(4);
    // m = i s ω×B with ω×B = (0, -B3, B2)
    r.ampere = std::abs(mom(2) - kI * s * (-u(nv + 5))) + std::abs(mom(3) - kI * s * u(nv + 4));
    r.momentum_long = std::abs(mom(1));
    r.state_eq = std::abs((1 + 1 / (s * s)) * n + std::sqrt(2.0 / 3) * q);
    r.transverse_e = std::abs(u(nv + 1)) + std::abs(u(nv + 2));
    r.micro_p0 = c.project_P1(f).norm();  // must vanish: f0 is purely macroscopic
  }
  return r;
}

void validate_initial(const CollisionMatrices& c, const InitialDataSpec& d, const RadialXiGrid& g, double tol) {
  for (double s : g.s) {
    const ConstraintReport r = check_constraints(c, d, s);
    const double scale = std::max(1.0, d.mode(c, s).norm());
    auto test = [&](double v, const char* name) {
      if (v > tol * scale)
        throw KinError("constraint-violation", std::string(name) + " violated at s = " + std::to_string(s));
    };
    test(r.gauss, "Gauss law");
    test(r.div_b, "div B0 = 0");
    if (d.kind == DataKind::Microscopic) test(r.micro_p0, "P0 f0 = 0");
    if (d.kind == DataKind::WellPrepared) {
      test(r.micro_p0, "f0 macroscopic");
      test(r.ampere, "m0 = curl B0");
      test(r.momentum_long, "div m0 = 0");
      test(r.state_eq, "grad n0 + sqrt(2/3) grad q0 = E0");
      test(r.transverse_e, "E0 = grad inverse-Laplacian n0");
    }
  }
}

GlobalNorms global_norms(const RadialXiGrid& g, const std::vector<double>& mode_norms) {
  if (static_cast<int>(mode_norms.size()) != g.size()) throw KinError("config", "mode norms do not match the grid");
  GlobalNorms out;
  double l2sq = 0, l1 = 0;
  std::vector<double> contrib(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const double vol = 4 * kPi * g.w[k] * g.s[k] * g.s[k];
    contrib[k] = vol * mode_norms[k] * mode_norms[k];
    l2sq += contrib[k];
    l1 += vol * mode_norms[k];
  }
  out.l2 = std::sqrt(l2sq);
  out.linf = std::pow(2 * kPi, -1.5) * l1;
  if (l2sq > 0 && g.size() > 1) out.coverage_warning = (contrib.front() + contrib.back()) > 0.01 * l2sq;
  return out;
}

NsmfState nsmf_initial(const CollisionMatrices& c, const CVec& v0, double s) {
  const int nv = c.size();
  auto mom = [&](int k) { return CVec(c.chi.col(k).cast<cplx>()).dot(v0.head(nv)); };
  const double s2 = s * s;
  const cplx theta = mom(4) - std::sqrt(2.0 / 3) * mom(0);
  NsmfState st;
  st.q = 3 * (1 + s2) / (3 + 5 * s2) * theta;
  st.n = -std::sqrt(2.0 / 3) * s2 / (1 + s2) * st.q;
  st.m = {0.0, mom(2), mom(3)};
  st.e = {-kI * st.n / s, 0.0, 0.0};
  st.b = {0.0, -kI * st.m[2] / s, kI * st.m[1] / s};
  return st;
}

std::vector<NsmfState> nsmf_ode_solve(const MacroMoments& mm, const NsmfState& init, double s,
                                      const std::vector<double>& times, const OdeOptions& opts) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 6>;
  if (!(s > 0)) throw KinError("config", "ODE needs s > 0");
  const double s2 = s * s;
  const double kappa0 = -mm.m22, kappa1 = -mm.m44;
  // (1 + s⁻²) m' = -κ0 s² m;  θ' = -κ1 s² q with q = 3(1+s²)/(3+5s²) θ, θ = q - √(2/3) n.
  const double rate_m = kappa0 * s2 / (1 + 1 / s2);
  const double rate_t = kappa1 * s2 * 3 * (1 + s2) / (3 + 5 * s2);
  const cplx theta0 = init.q - std::sqrt(2.0 / 3) * init.n;
  State y = {init.m[1].real(), init.m[1].imag(), init.m[2].real(), init.m[2].imag(), theta0.real(), theta0.imag()};
  auto rhs = [&](const State& x, State& dx, double) {
    for (int k = 0; k < 4; ++k) dx[k] = -rate_m * x[k];
    for (int k = 4; k < 6; ++k) dx[k] = -rate_t * x[k];
  };
  std::vector<NsmfState> out;
  long steps = 0;
  auto observer = [&](const State& x, double t) {
    NsmfState st;
    st.t = t;
    const cplx m2(x[0], x[1]), m3(x[2], x[3]), th(x[4], x[5]);
    st.q = 3 * (1 + s2) / (3 + 5 * s2) * th;
    st.n = -std::sqrt(2.0 / 3) * s2 / (1 + s2) * st.q;
    st.m = {0.0, m2, m3};
    st.e = {-kI * st.n / s, 0.0, 0.0};
    st.b = {0.0, -kI * m3 / s, kI * m2 / s};
    out.push_back(st);
  };
  if (times.empty()) return out;
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw KinError("config", "ODE output times must increase");
  // Local tolerances sit two decades below ode_tol so the accumulated error stays inside it. Control is purely
  // relative: each component is a real decaying exponential that never crosses zero, over many decades at large s.
  auto stepper = ode::make_dense_output(std::numeric_limits<double>::min(), opts.ode_tol * 1e-2,
                                        ode::runge_kutta_dopri5<State>());
  auto counting_rhs = [&](const State& x, State& dx, double t) {
    if (++steps > opts.max_steps) throw KinError("ode-tolerance", "step budget exhausted");
    rhs(x, dx, t);
  };
  const double dt0 = std::min(1e-3, 0.1 / std::max({rate_m, rate_t, 1e-12}));
  ode::integrate_times(stepper, counting_rhs, y, times.begin(), times.end(), dt0, observer);
  for (const auto& st : out)
    for (const cplx& v : {st.n, st.q, st.m[1], st.m[2]})
      if (!std::isfinite(std::abs(v))) throw KinError("ode-tolerance", "non-finite state");
  return out;
}

NsmfState nsmf_from_physical(const CollisionMatrices& c, const CVec& phys, double t) {
  const int nv = c.size();
  auto mom = [&](int k) { return CVec(c.chi.col(k).cast<cplx>()).dot(phys.head(nv)); };
  NsmfState st;
  st.t = t;
  st.n = mom(0);
  st.q = mom(4);
  st.m = {mom(1), mom(2), mom(3)};
  st.e = {phys(nv), phys(nv + 1), phys(nv + 2)};
  st.b = {phys(nv + 3), phys(nv + 4), phys(nv + 5)};
  return st;
}

double nsmf_distance(const NsmfState& a, const NsmfState& b) {
  auto flat = [](const NsmfState& x) {
    std::vector<cplx> v = {x.n, x.q};
    for (int k = 0; k < 3; ++k) {
      v.push_back(x.m[k]);
      v.push_back(x.e[k]);
      v.push_back(x.b[k]);
    }
    return v;
  };
  const auto va = flat(a), vb = flat(b);
  double num = 0, den = 0;
  for (size_t k = 0; k < va.size(); ++k) {
    num += std::norm(va[k] - vb[k]);
    den += std::norm(vb[k]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace kinspec
