#include <cmath>

#include "common.hpp"
#include "kinspec/dispersion.hpp"

using namespace testing;

namespace {

CVec chi_mode(const CollisionMatrices& c, int j) {
  CVec u = CVec::Zero(c.size() + kFieldCount);
  u.head(c.size()) = c.chi.col(j).cast<cplx>();
  return u;
}

}  // namespace

TEST_CASE("mode operator at eps = 0 decouples") {
  const auto& f = fixture(8);
  const ModeOperator op = assemble_mode(*f.ctx, 0.8, 0.0, false);
  const CMat a = op.dense();
  const int nv = f.c.size();
  CHECK((a.topLeftCorner(nv, nv) - f.c.l_mat.cast<cplx>()).norm() <= 1e-14 * f.c.l_norm);
  CHECK(a.rightCols(kFieldCount).norm() == 0.0);
  CHECK(a.bottomRows(kFieldCount).norm() == 0.0);
  ModeSpectrum sp = eig_mode(op);
  double smallest = 1e300;
  for (const auto& b : sp.branches) smallest = std::min(smallest, std::abs(b.lambda));
  CHECK(smallest <= 1e-10);
}

TEST_CASE("mode operator is dissipative in the weighted metric") {
  const auto& f = fixture(8);
  for (double s : {0.1, 1.0, 30.0}) {
    const ModeOperator op = assemble_mode(*f.ctx, s, 0.3);
    for (unsigned k = 0; k < 10; ++k) {
      const CVec u = random_complex(f.ctx->n_full(), 300 + k);
      const double re = weighted_inner(f.c, op.apply(u), u, s).real();
      CHECK(re <= 1e-10 * weighted_inner(f.c, u, u, s).real());
    }
  }
}

TEST_CASE("adjoint identity in the weighted metric") {
  const auto& f = fixture(8);
  const double s = 1.0, eps = 0.1;
  const ModeOperator op = assemble_mode(*f.ctx, s, eps);
  const CMat a = op.dense(), g = op.metric();
  // Adjoint with respect to (U,V)_ξ = V^H G U.
  const CMat adj = g.inverse() * a.adjoint() * g;
  const CVec u = random_complex(f.ctx->n_full(), 1), v = random_complex(f.ctx->n_full(), 2);
  const cplx lhs = weighted_inner(f.c, op.apply(u), v, s);
  const cplx rhs = weighted_inner(f.c, u, adj * v, s);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * (1 + std::abs(lhs)));
}

TEST_CASE("weighted norm values") {
  const auto& c = fixture(8).c;
  CHECK(weighted_inner(c, chi_mode(c, 0), chi_mode(c, 0), 1.0).real() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(weighted_inner(c, chi_mode(c, 0), chi_mode(c, 0), 0.5).real() == doctest::Approx(5.0).epsilon(1e-12));
  CVec u = random_complex(c.size() + kFieldCount, 9);
  u.head(c.size()) -= c.project_Pd(CVec(u.head(c.size())));
  CHECK(weighted_inner(c, u, u, 0.2).real() == doctest::Approx(u.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("spectral dichotomy") {
  const auto& f = fixture(8);
  const double line = -f.c.gap_mu / 2;
  {
    const ModeOperator op = assemble_mode(*f.ctx, 0.5, 0.1);
    CHECK(eig_mode(op).count_above(line) == 9);
  }
  {
    const ModeOperator op = assemble_mode(*f.ctx, 20.0, 0.5);
    CHECK(eig_mode(op).count_above(line) == 4);
  }
}

TEST_CASE("leading-order eigenvalues and coefficients") {
  const auto& m = fixture(8).m;
  CHECK(eta_of_s(1, 0) == cplx(0, 1));
  CHECK(eta_of_s(-1, 0) == cplx(0, -1));
  for (int j : {0, 2, 3}) CHECK(eta_of_s(j, 0) == cplx(0, 0));
  for (int j : {4, 5}) CHECK(eta_of_s(j, 0) == cplx(0, -1));
  for (int j : {6, 7}) CHECK(eta_of_s(j, 0) == cplx(0, 1));
  CHECK(b_of_s(2, 1.0, m) == doctest::Approx(-m.m22 / 2).epsilon(1e-14));
  CHECK(b_of_s(0, 0.0, m) == 0.0);
}

TEST_CASE("leading-order eigenvectors are orthonormal") {
  const auto& c = fixture(8).c;
  const double s = 0.7;
  for (int i = -1; i <= 7; ++i)
    for (int j = -1; j <= 7; ++j) {
      const cplx g = weighted_inner(c, low_freq_eigvec(c, i, s), low_freq_eigvec(c, j, s), s);
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-10);
    }
  const double t = 1e-3;
  const CVec h0 = low_freq_eigvec(c, 0, t);
  const cplx a0 = c.chi.col(0).cast<cplx>().dot(h0.head(c.size()));
  CHECK(std::abs(a0) / (t * t) == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-5));
  CHECK(std::abs(c.chi.col(1).cast<cplx>().dot(h0.head(c.size()))) <= 1e-14);
}

TEST_CASE("labeled branches follow the expansion") {
  const auto& f = fixture(8);
  const double s = 0.5, eps = 0.02;
  const ModeOperator op = assemble_mode(*f.ctx, s, eps);
  ModeSpectrum sp = eig_mode(op);
  const auto br = match_branches(sp, f.m);
  REQUIRE(br.size() == 9);
  double bmax = 0;
  for (int j = -1; j <= 7; ++j) bmax = std::max(bmax, std::abs(b_of_s(j, s, f.m)));
  double total = 0;
  cplx l4, l5;
  for (const auto& b : br) {
    total += b.residual;
    // Each labeled eigenvector is close to its leading-order vector.
    const CVec u = sp.right(b);
    const double ov = std::abs(weighted_inner(f.c, u, low_freq_eigvec(f.c, b.label, s), s)) / weighted_norm(f.c, u, s);
    CHECK(ov >= 0.99);
    if (b.label == 2 || b.label == 3) CHECK(std::abs(b.lambda.imag()) <= 1e-8);
    if (b.label == 4) l4 = b.lambda;
    if (b.label == 5) l5 = b.lambda;
  }
  CHECK(std::abs(l4 - l5) <= 1e-8);
  CHECK(total <= 9 * (2 * eps * eps * bmax + std::pow(eps * s, 3)));
}

TEST_CASE("resolvent moments") {
  const auto& f = fixture(8);
  DispersionContext d0(*f.ctx, 0.7, 0.0);
  CHECK(std::abs(d0.resolvent_moment(2, 2, 0.0) - f.m.m22) <= 1e-10 * std::abs(f.m.m22));
  CHECK(std::abs(d0.resolvent_moment(1, 4, 0.3) - d0.resolvent_moment(4, 1, 0.3)) <= 1e-10);
  double prev = 1e300;
  for (double es : {1.0, 10.0, 100.0}) {
    DispersionContext dc(*f.ctx, es / 0.5, 0.5);
    const double r = std::abs(dc.resolvent_moment(2, 2, 0.0));
    CHECK(r < prev);
    prev = r;
    double res = 0;
    const cplx direct = dc.resolvent_moment_direct(2, 2, 0.0, &res);
    CHECK(std::abs(direct - dc.resolvent_moment(2, 2, 0.0)) <= 1e-8 * std::abs(direct));
  }
}

TEST_CASE("dispersion functions vanish at the leading-order roots") {
  const auto& f = fixture(8);
  const double s = 0.6;
  DispersionContext dc(*f.ctx, s, 0.0);
  CHECK(std::abs(dc.d1(0.0)) <= 1e-12);
  for (double sg : {-1.0, 1.0}) {
    CHECK(std::abs(dc.d1(sg * kI * std::sqrt(1 + s * s))) <= 1e-12);
    CHECK(std::abs(dc.d0(sg * kI * std::sqrt(1 + 5 * s * s / 3))) <= 1e-12);
  }
  for (int j : {-1, 0, 1}) {
    CHECK(std::abs(solve_root_D0(j, dc).z - eta_of_s(j, s)) <= 1e-14);
    CHECK(solve_root_D1(j, dc).iterations == 1);
  }
}

TEST_CASE("dispersion roots converge at second order") {
  const auto& f = fixture(8);
  const double s = 0.5;
  RootOptions ro;
  std::array<double, 2> err{};
  for (int k = 0; k < 2; ++k) {
    const double eps = k == 0 ? 0.02 : 0.01;
    DispersionContext dc(*f.ctx, s, eps);
    const RootResult r = solve_root_D0(1, dc, ro);
    err[k] = std::abs(r.z - eta_of_s(1, s) + eps * b_of_s(1, s, f.m));
  }
  CHECK(err[0] / err[1] >= 3.4);
  CHECK(err[0] / err[1] <= 4.6);
  // The D1 roots with j = ±1 carry the electromagnetic labels: same second-order behaviour with b_4.
  for (int k = 0; k < 2; ++k) {
    const double eps = k == 0 ? 0.02 : 0.01;
    DispersionContext dc(*f.ctx, s, eps);
    err[k] = std::abs(solve_root_D1(-1, dc, ro).z - eta_of_s(4, s) + eps * b_of_s(4, s, f.m));
  }
  CHECK(err[0] / err[1] >= 3.4);
  CHECK(err[0] / err[1] <= 4.6);
  DispersionContext dc(*f.ctx, s, 0.05);
  const RootResult rp = solve_root_D1(1, dc), rm = solve_root_D1(-1, dc);
  CHECK(std::abs(rp.z - std::conj(rm.z)) <= 1e-10);
}

TEST_CASE("high-frequency roots") {
  const auto& f = fixture(8);
  const double s = 100, eps = 0.5;
  DispersionContext dc(*f.ctx, s, eps);
  const RootResult rp = solve_root_D2(1, dc), rm = solve_root_D2(-1, dc);
  const cplx zp = rp.z - kI * s, zm = rm.z + kI * s;
  CHECK(zp.real() < 0);
  CHECK(std::abs(zp - std::conj(zm)) <= 1e-10 * std::abs(zp));
  const ModeOperator op = assemble_mode(*f.ctx, s, eps);
  const CMat a = op.dense();
  cplx b1, b2;
  for (int label = 1; label <= 4; ++label) {
    const HighFreqPair hp = high_freq_eigpair(label, dc);
    CHECK((a * hp.vec - hp.beta * hp.vec).norm() <= 10 * 1e-12 * hp.vec.norm() * (1 + a.norm()));
    if (label == 1) b1 = hp.beta;
    if (label == 2) b2 = hp.beta;
  }
  CHECK(std::abs(b1 - b2) <= 1e-12 * std::abs(b1));
  double prev = 1e300;
  for (double ss : {40.0, 160.0, 640.0}) {
    DispersionContext d(*f.ctx, ss, eps);
    const double gap = std::abs(high_freq_eigpair(3, d).c - kI / std::sqrt(2.0));
    CHECK(gap < prev);
    prev = gap;
  }
}
