#include <cmath>

#include "common.hpp"
#include "kinspec/field.hpp"
#include "kinspec/limits.hpp"
#include "kinspec/semigroup.hpp"

using namespace testing;

namespace {

struct Prop {
  ModeOperator op;
  ModeSpectrum sp;
  std::unique_ptr<ModePropagator> p;
  Prop(const Fixture& f, double s, double eps) : op(assemble_mode(*f.ctx, s, eps)) {
    sp = eig_mode(op);
    p = std::make_unique<ModePropagator>(sp);
  }
};

double rel(const CVec& a, const CVec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("propagator identity, contraction and semigroup law") {
  const auto& f = fixture(8);
  for (double s : {0.2, 3.0, 60.0}) {
    Prop pr(f, s, 0.2);
    const CVec u0 = random_complex(f.ctx->n_full(), 77);
    CHECK(pr.p->propagate(u0, 0.0) == u0);
    double prev = weighted_norm(f.c, u0, s);
    for (double t : {0.1, 1.0, 10.0}) {
      const double n = weighted_norm(f.c, pr.p->propagate(u0, t), s);
      CHECK(n <= prev * (1 + 1e-10));
      prev = n;
    }
    const CVec a = pr.p->propagate(pr.p->propagate(u0, 0.03), 0.05);
    CHECK(rel(a, pr.p->propagate(u0, 0.08)) <= 1e-8);
    CHECK(rel(pr.p->propagate(u0, 0.05), pr.p->propagate_pade(u0, 0.05)) <= 1e-8);
  }
}

TEST_CASE("three-part decomposition") {
  const auto& f = fixture(8);
  const Regimes reg;
  {
    // Low regime: an exact eigenvector evolves inside S1 only.
    Prop pr(f, 0.5, 0.05);
    const auto low = match_branches(pr.sp, f.m);
    const auto& b = low[3];
    const CVec u0 = pr.sp.right(b);
    const double t = 0.4;
    const S123 d = decompose_S123(*pr.p, low, {}, u0, t, reg);
    CHECK(d.s2.norm() == 0.0);
    CHECK(d.s3.norm() <= 1e-8 * u0.norm());
    CHECK(rel(d.s1, std::exp(b.lambda * t / (0.05 * 0.05)) * u0) <= 1e-8);
  }
  {
    // Middle regime: S1 = S2 = 0 by construction.
    Prop pr(f, 5.0, 0.1);
    const CVec u0 = random_complex(f.ctx->n_full(), 3);
    const S123 d = decompose_S123(*pr.p, {}, {}, u0, 0.01, reg);
    CHECK(d.s1.norm() == 0.0);
    CHECK(d.s2.norm() == 0.0);
    CHECK(rel(d.s3, pr.p->propagate(u0, 0.01)) <= 1e-14);
  }
  {
    Prop pr(f, 40.0, 0.5);
    const auto high = match_high_branches(pr.sp);
    const CVec u0 = random_complex(f.ctx->n_full(), 4);
    const double t = 0.3;
    const S123 d = decompose_S123(*pr.p, {}, high, u0, t, reg);
    CHECK(d.s1.norm() == 0.0);
    CHECK(rel(d.s1 + d.s2 + d.s3, pr.p->propagate_pade(u0, t)) <= 1e-8);
  }
}

TEST_CASE("S3 decays at a rate independent of eps") {
  const auto& f = fixture(8);
  std::vector<double> rates;
  for (double e : {0.1, 0.05, 0.025}) {
    const S3Decay d = s3_decay(*f.ctx, f.m, 0.5, e, 5);
    CHECK(d.recon <= 1e-8);
    CHECK(d.max_contraction <= 1e-10);
    rates.push_back(d.rate);
  }
  const double lo = *std::min_element(rates.begin(), rates.end());
  const double hi = *std::max_element(rates.begin(), rates.end());
  CHECK(lo > 0);
  CHECK(hi - lo <= 0.4 * (hi + lo) / 2);
}

TEST_CASE("Q map") {
  const auto& c = fixture(8).c;
  const int nv = c.size();
  CVec u = CVec::Zero(nv + kFieldCount);
  u.head(nv) = c.chi.col(2).cast<cplx>();
  CHECK(q_map(c, u, 1.0).tail(kPhysFields).norm() <= 1e-14);
  const double s = 0.3;
  const CVec r = random_complex(nv + kFieldCount, 12);
  // ‖QU‖ with the Euclidean norm of (f, E, B) equals ‖U‖_ξ.
  CHECK(q_map(c, r, s).norm() == doctest::Approx(weighted_norm(c, r, s)).epsilon(1e-12));
  CVec d = CVec::Zero(nv + kFieldCount);
  d.head(nv) = c.chi.col(0).cast<cplx>();
  CHECK(std::abs(q_map(c, d, 2.0)(nv)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rel(to_mode_layout(c, q_map(c, r, s)).tail(kFieldCount), CVec(r.tail(kFieldCount))) <= 1e-15);
  CHECK(gauss_residual(c, q_map(c, r, s), s) <= 1e-12);
}

TEST_CASE("fluid semigroup projects onto the slow modes") {
  const auto& f = fixture(8);
  const double s = 0.4;
  const FluidModeSemigroup fs = make_fluid_semigroup(f.c, f.m, s);
  CVec v = 0.3 * low_freq_eigvec(f.c, 0, s) - 0.7 * low_freq_eigvec(f.c, 2, s) + 0.2 * kI * low_freq_eigvec(f.c, 3, s);
  CHECK(rel(fs.apply_tilde(v, 0.0), v) <= 1e-12);
  CHECK(rel(nsmf_mode_apply(fs, v, 0.0), q_map(f.c, v, s)) <= 1e-12);
  CVec w = low_freq_eigvec(f.c, 1, s) - 0.5 * low_freq_eigvec(f.c, 6, s);
  CHECK(fs.apply_tilde(w, 0.0).norm() <= 1e-12);
  const CVec l0 = low_freq_eigvec(f.c, 0, s);
  const double t = 3.0;
  CHECK(rel(fs.apply_tilde(l0, t), std::exp(-b_of_s(0, s, f.m) * t) * l0) <= 1e-12);
}

TEST_CASE("oscillation part") {
  const auto& f = fixture(8);
  const InitialDataSpec wp = make_initial(DataKind::WellPrepared);
  for (double s : {0.05, 0.5, 3.0}) {
    const CVec v = project_PA(f.c, wp.mode(f.c, s));
    CHECK(oscillation_part(f.c, f.m, v, 0.0, s, 0.1).norm() <= 1e-12 * v.norm());
  }
  const double s = 0.5, eps = 0.1;
  const CVec v = random_complex(f.ctx->n_full(), 8);
  const CVec pa = project_PA(f.c, v);
  const FluidModeSemigroup fs = make_fluid_semigroup(f.c, f.m, s);
  // At t = 0 the oscillation part is P_A V minus its slow-mode projection.
  CHECK(rel(oscillation_part(f.c, f.m, pa, 0.0, s, eps), CVec(pa - fs.apply_tilde(pa, 0.0))) <= 1e-10);
  const CVec l4 = low_freq_eigvec(f.c, 4, s);
  for (double t : {0.3, 2.0}) {
    const cplx a = weighted_inner(f.c, oscillation_part(f.c, f.m, l4, t, s, eps), l4, s);
    CHECK(std::abs(a) == doctest::Approx(std::exp(-b_of_s(4, s, f.m) * t)).epsilon(1e-12));
  }
}

TEST_CASE("oscillation part removes the initial layer at mode level") {
  const auto& f = fixture(8);
  const InitialDataSpec gen = make_initial(DataKind::Generic);
  const double s = 0.5, t = 0.5;
  std::array<double, 2> err{};
  for (int k = 0; k < 2; ++k) {
    const double eps = k == 0 ? 0.025 : 0.0125;
    Prop pr(f, s, eps);
    const FluidModeSemigroup fs = make_fluid_semigroup(f.c, f.m, s);
    const CVec pa = project_PA(f.c, gen.mode(f.c, s));
    const CVec diff = pr.p->propagate(pa, t) - fs.apply_tilde(pa, t) - oscillation_part(f.c, f.m, pa, t, s, eps);
    err[k] = weighted_norm(f.c, diff, s) / weighted_norm(f.c, pa, s);
  }
  CHECK(err[0] <= 0.05);
  CHECK(err[1] < err[0]);
}

TEST_CASE("macroscopic and microscopic projections") {
  const auto& c = fixture(8).c;
  const int nv = c.size();
  CVec u = CVec::Zero(nv + kFieldCount);
  u.head(nv) = c.chi.col(4).cast<cplx>();
  CHECK(rel(project_PA(c, u), u) <= 1e-12);
  const Vec micro = c.project_P1(c.times_v(0, c.chi.col(2)));
  CVec w = random_complex(nv + kFieldCount, 5);
  w.head(nv) = micro.cast<cplx>();
  CVec expect = CVec::Zero(nv + kFieldCount);
  expect.head(nv) = micro.cast<cplx>();
  CHECK(rel(project_PB(c, w), expect) <= 1e-12);
  const CVec r = random_complex(nv + kFieldCount, 6);
  CHECK(project_PA(c, r).squaredNorm() + project_PB(c, r).squaredNorm() ==
        doctest::Approx(r.squaredNorm()).epsilon(1e-12));
}
