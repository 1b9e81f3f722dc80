#include <cmath>

#include "common.hpp"
#include "kinspec/field.hpp"
#include "kinspec/semigroup.hpp"

using namespace testing;

TEST_CASE("radial grid") {
  const RadialXiGrid g = make_radial_grid(0.01, 50, 100);
  CHECK(g.size() == 100);
  for (int k = 0; k < g.size(); ++k) CHECK(g.w[k] > 0);
  for (int k = 1; k < g.size(); ++k) CHECK(g.s[k] > g.s[k - 1]);
  const RadialXiGrid d = default_radial_grid(0.05, 50);
  CHECK(d.s.back() >= Regimes{}.r1 / 0.05);
  CHECK_THROWS_AS(make_radial_grid(1, 0.5, 10), KinError);
}

TEST_CASE("initial data constraints") {
  const auto& c = fixture(8).c;
  const RadialXiGrid g = make_radial_grid(0.02, 10, 30);
  for (DataKind k : {DataKind::WellPrepared, DataKind::Generic, DataKind::Microscopic}) {
    const InitialDataSpec d = make_initial(k);
    CHECK_NOTHROW(validate_initial(c, d, g));
    for (double s : g.s) {
      const ConstraintReport r = check_constraints(c, d, s);
      CHECK(r.gauss <= 1e-12);
      CHECK(r.div_b == 0.0);
      if (k == DataKind::Microscopic) CHECK(r.micro_p0 <= 1e-12);
      if (k == DataKind::WellPrepared) {
        CHECK(r.ampere <= 1e-12);
        CHECK(r.state_eq <= 1e-12);
        CHECK(r.transverse_e == 0.0);
      }
    }
  }
  CHECK_THROWS_AS(make_initial(DataKind::WellPrepared, {1.0, true}), KinError);
  InitialDataSpec bad = make_initial(DataKind::Microscopic);
  bad.n = 1;
  bad.kind = DataKind::Microscopic;
  CHECK_THROWS_AS(validate_initial(c, bad, g), KinError);
}

TEST_CASE("generic density vanishes at the origin so that E0 stays bounded") {
  const auto& c = fixture(8).c;
  const InitialDataSpec d = make_initial(DataKind::Generic);
  const int nv = c.size();
  const double e1a = std::abs(d.physical(c, 1e-3)(nv)), e1b = std::abs(d.physical(c, 1e-5)(nv));
  CHECK(e1a == doctest::Approx(e1b).epsilon(1e-4));
}

TEST_CASE("well-prepared data lie in the slow subspace") {
  const auto& c = fixture(8).c;
  const InitialDataSpec d = make_initial(DataKind::WellPrepared);
  for (double s : {0.05, 0.7, 4.0}) {
    const CVec v = d.mode(c, s);
    CVec proj = CVec::Zero(v.size());
    for (int j : {0, 2, 3}) {
      const CVec l = low_freq_eigvec(c, j, s);
      proj += weighted_inner(c, v, l, s) * l;
    }
    CHECK((v - proj).norm() <= 1e-12 * v.norm());
  }
}

TEST_CASE("global norms") {
  const RadialXiGrid g = make_radial_grid(0.01, 10, 50);
  std::vector<double> z(g.size(), 0.0);
  const GlobalNorms n0 = global_norms(g, z);
  CHECK(n0.l2 == 0.0);
  CHECK(n0.linf == 0.0);
  std::vector<double> one(g.size(), 0.0);
  one[20] = 2.0;
  const GlobalNorms n1 = global_norms(g, one);
  CHECK(n1.l2 == doctest::Approx(2.0 * std::sqrt(4 * M_PI * g.w[20]) * g.s[20]).epsilon(1e-14));
  // Nested grids: a smooth profile gives the same L2 norm.
  auto l2_of = [](const RadialXiGrid& gr) {
    std::vector<double> v(gr.size());
    for (int k = 0; k < gr.size(); ++k) v[k] = std::exp(-gr.s[k] * gr.s[k] / 2);
    return global_norms(gr, v).l2;
  };
  const double a = l2_of(make_radial_grid(1e-3, 12, 200)), b = l2_of(make_radial_grid(1e-3, 12, 400));
  CHECK(a == doctest::Approx(b).epsilon(1e-4));
  // ∫ e^{-s²} d³ξ = π^{3/2}.
  CHECK(b * b == doctest::Approx(std::pow(M_PI, 1.5)).epsilon(1e-4));
}

TEST_CASE("fluid ODE against closed forms and the fluid semigroup") {
  const auto& f = fixture(8);
  const int nv = f.c.size();
  const std::vector<double> times = {0.0, 0.5, 2.0, 7.0};
  for (double s : {0.08, 0.9, 3.5}) {
    // Compatible data: m0 = i s ω×B0.
    const std::array<cplx, 2> b = {cplx(0.3, -0.2), cplx(-0.5, 0.4)};
    CVec phys = CVec::Zero(nv + kPhysFields);
    phys.head(nv) = cplx(0.4, 0.1) * f.c.chi.col(0).cast<cplx>() + cplx(-0.2, 0.3) * f.c.chi.col(4).cast<cplx>() +
                    (-kI * s * b[1]) * f.c.chi.col(2).cast<cplx>() + (kI * s * b[0]) * f.c.chi.col(3).cast<cplx>();
    phys(nv) = -kI * f.c.chi.col(0).cast<cplx>().dot(phys.head(nv)) / s;
    phys(nv + 4) = b[0];
    phys(nv + 5) = b[1];
    const CVec v0 = project_PA(f.c, to_mode_layout(f.c, phys));
    const NsmfState init = nsmf_initial(f.c, v0, s);
    const auto traj = nsmf_ode_solve(f.m, init, s, times, {});
    const FluidModeSemigroup fs = make_fluid_semigroup(f.c, f.m, s);
    const cplx th0 = init.q - std::sqrt(2.0 / 3) * init.n;
    for (size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      const cplx th = traj[i].q - std::sqrt(2.0 / 3) * traj[i].n;
      CHECK(std::abs(th - std::exp(-b_of_s(0, s, f.m) * t) * th0) <= 1e-10 * std::abs(th0));
      CHECK(std::abs(traj[i].m[2] - std::exp(-b_of_s(2, s, f.m) * t) * init.m[2]) <= 1e-10 * std::abs(init.m[2]));
      const NsmfState y = nsmf_from_physical(f.c, nsmf_mode_apply(fs, v0, t), t);
      CHECK(nsmf_distance(traj[i], y) <= 1e-9);
    }
  }
}
