#include <cmath>

#include "common.hpp"
#include "kinspec/collision.hpp"
#include "kinspec/quadrature.hpp"

using namespace testing;

TEST_CASE("collision frequency at the origin") {
  // (1/r)∫₀^r e^{-u²/2} du → 1 as r → 0.
  CHECK(eval_nu({0, 0, 0}) == doctest::Approx(2 * std::sqrt(2 * M_PI)).epsilon(1e-10));
  CHECK(eval_nu({1e-6, 0, 0}) == doctest::Approx(2 * std::sqrt(2 * M_PI)).epsilon(1e-10));
}

TEST_CASE("collision frequency is radial and grows like pi |v|") {
  const Vec3 v(0.3, -1.2, 0.7);
  CHECK(eval_nu(v) == doctest::Approx(eval_nu(-v)).epsilon(1e-15));
  CHECK(eval_nu({1e3, 0, 0}) / 1e3 == doctest::Approx(M_PI).epsilon(0.01));
}

TEST_CASE("kernel closed form and symmetry") {
  const Vec3 v(1, 0, 0), w(-1, 0, 0);
  // Antipodal unit vectors: the two Gaussian terms cancel exactly.
  CHECK(std::abs(eval_kernel(v, w)) <= 1e-15);
  // |v| = |w| = 1, |v - w| = √2: (√2 e^{-1/4} - e^{-1/2}/√2)/√(2π).
  const double k_ref = (std::sqrt(2.0) * std::exp(-0.25) - std::exp(-0.5) / std::sqrt(2.0)) / std::sqrt(2 * M_PI);
  CHECK(eval_kernel(v, Vec3(0, 1, 0)) == doctest::Approx(k_ref).epsilon(1e-12));
  const Vec3 a(0.4, 1.1, -0.3), b(-0.9, 0.2, 0.8);
  CHECK(eval_kernel(a, b) == doctest::Approx(eval_kernel(b, a)).epsilon(1e-15));
  // The singular part is exactly 1/|v - w|.
  double prev = 0;
  for (double h : {1e-2, 1e-4, 1e-6}) {
    const double g = eval_kernel(a, a + Vec3(h, 0, 0)) * h;
    CHECK(std::isfinite(g));
    if (prev > 0) CHECK(g == doctest::Approx(prev).epsilon(0.05));
    prev = g;
  }
  CHECK_THROWS_AS(eval_kernel(a, a), KinError);
}

TEST_CASE("velocity quadrature integrates the Maxwellian") {
  const VelocityQuadrature q8 = build_quadrature(8);
  CHECK(q8.size() == 512);
  double mass = 0;
  for (int i = 0; i < q8.size(); ++i) mass += q8.weights(i) * maxwellian(q8.nodes[i]);
  CHECK(std::abs(mass - 1) <= 1e-10);
  CHECK(build_quadrature(12).size() == 1728);
  const VelocityQuadrature q16 = build_quadrature(16);
  CHECK(q16.moments.max() <= q8.moments.max() + 1e-14);
}

TEST_CASE("linearized operator is non-positive with the collision invariants as kernel") {
  const auto& f = fixture(8);
  const auto& c = f.c;
  for (unsigned k = 0; k < 100; ++k) {
    const Vec g = random_real(c.size(), 1000 + k);
    CHECK(g.dot(c.l_mat * g) <= 1e-12 * g.squaredNorm());
  }
  for (int j = 0; j < 5; ++j) CHECK((c.l_mat * c.chi.col(j)).norm() / c.l_norm <= c.opts.nullspace_tol);
  CHECK(c.gap_mu > 0);
}

TEST_CASE("macroscopic projections") {
  const auto& c = fixture(8).c;
  const Vec chi4 = c.chi.col(4);
  CHECK((c.project_P0(chi4) - chi4).norm() <= 1e-12);
  CHECK(c.project_P1(chi4).norm() <= 1e-12);
  // f = v1² χ0: (f, χ0) = ∫ v1² M dv = 1.
  const Vec f = c.times_v(0, c.times_v(0, c.chi.col(0)));
  CHECK(c.chi.col(0).dot(f) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((c.project_Pd(f) - c.chi.col(0)).norm() <= 1e-10);
  const Vec g = random_real(c.size(), 7);
  const double lhs = c.project_P0(g).squaredNorm() + c.project_P1(g).squaredNorm();
  CHECK(lhs == doctest::Approx(g.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("inverse of L on the microscopic range") {
  const auto& f = fixture(8);
  const auto& c = f.c;
  CHECK(c.solve_Linv_P1(c.chi.col(0)).norm() <= 1e-12);
  const Vec g = c.project_P1(c.times_v(0, c.chi.col(2)));
  const Vec x = c.solve_Linv_P1(g);
  CHECK(x.dot(c.times_v(0, c.chi.col(2))) < 0);
  for (unsigned k = 0; k < 5; ++k) {
    const Vec r = random_real(c.size(), 50 + k);
    const Vec y = c.solve_Linv_P1(r);
    CHECK((c.l_mat * y - c.project_P1(r)).norm() <= 10 * c.opts.solve_tol * r.norm());
  }
}

TEST_CASE("transport coefficients") {
  const auto& f = fixture(8);
  CHECK(f.m.kappa0 > 0);
  CHECK(f.m.kappa1 > 0);
  CHECK(f.m.m11 < 0);
  CHECK(f.m.m44 < 0);
  CHECK(std::abs(f.m.m22 - f.m.m33) <= 1e-8);
  CHECK(f.m.kappa0 == doctest::Approx(-f.m.m22).epsilon(1e-14));
}
