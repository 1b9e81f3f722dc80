#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "kinspec/kernels.hpp"
#include "kinspec/types.hpp"

using namespace kinspec;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<std::pair<double, double>> samples(const std::function<double(double)>& f, double lo, double hi, int n) {
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < n; ++k) {
    const double t = lo * std::pow(hi / lo, double(k) / (n - 1));
    out.emplace_back(t, f(t));
  }
  return out;
}

}  // namespace

TEST_CASE("heat kernel sup norm matches the Gaussian value") {
  SymbolSpec sp;
  sp.kind = SymbolKind::Quadratic;
  for (double t : {1.0, 10.0, 100.0}) {
    // ∫ e^{-t|ξ|²} d³ξ = (π/t)^{3/2}
    CHECK(kernel_lp_norm(sp, t, kInf) == doctest::Approx(std::pow(M_PI / t, 1.5)).epsilon(1e-10));
  }
  const double r = std::log(kernel_lp_norm(sp, 40.0, kInf) / kernel_lp_norm(sp, 10.0, kInf)) / std::log(4.0);
  CHECK(r == doctest::Approx(-1.5).epsilon(1e-8));
}

TEST_CASE("pure-power scaling of the quadratic symbol") {
  for (int m : {0, 1, 2}) {
    SymbolSpec sp;
    sp.kind = SymbolKind::Quadratic;
    sp.m = m;
    const double ratio = kernel_lp_norm(sp, 12.0, kInf) / kernel_lp_norm(sp, 3.0, kInf);
    CHECK(ratio == doctest::Approx(std::pow(4.0, -(3.0 + m) / 2)).epsilon(1e-8));
  }
}

TEST_CASE("Plancherel anchor") {
  SymbolSpec sp;
  sp.kind = SymbolKind::Quadratic;
  CHECK(kernel_lp_norm(sp, 2.0, 2) == doctest::Approx(kernel_plancherel(sp, 2.0)).epsilon(1e-8));
}

TEST_CASE("mixed symbol decay exponent") {
  SymbolSpec sp;
  sp.kind = SymbolKind::Mixed;
  sp.j = 1;
  // Reference slopes from an independent adaptive quadrature of the same radial integral.
  auto slope = [&](double lo, double hi) {
    return fit_exponent(samples([&](double t) { return kernel_lp_norm(sp, t, kInf); }, lo, hi, 10)).exponent;
  };
  CHECK(slope(1, 1e3) == doctest::Approx(-1.1219).epsilon(1e-3));
  // Far out in time the s^6 term of the symbol is negligible and the slope reaches -(3 + j)/4.
  CHECK(std::abs(slope(1e4, 1e6) + 1.0) <= 0.01);
  sp.j = 0;
  CHECK(std::abs(slope(1e4, 1e6) + 0.75) <= 0.01);
}

TEST_CASE("dispersive L2 norm matches Plancherel") {
  // ‖K‖₂² = (2π)³ 4π ∫ s² (1 + s²)^{-5/2} ds = (2π)³ 4π/3 at a = 5/4, for every t.
  const double ref = std::sqrt(std::pow(2 * M_PI, 3) * 4 * M_PI / 3);
  for (double t : {5.0, 30.0}) CHECK(dispersive_lp_norm(1.25, t, 2) == doctest::Approx(ref).epsilon(1e-5));
}

TEST_CASE("dispersive kernel") {
  const FitResult fr = fit_exponent(samples([](double t) { return dispersive_lp_norm(1.25, t, kInf); }, 5, 50, 8), 1.0);
  CHECK(std::abs(fr.exponent + 1.5) <= 0.1);
  const FitResult f2 = fit_exponent(samples([](double t) { return dispersive_lp_norm(1.25, t, 2); }, 5, 50, 6), 1.0);
  CHECK(std::abs(f2.exponent) <= 0.05);
  CHECK(dispersive_lp_norm(2.0, 10.0, kInf) <= dispersive_lp_norm(1.25, 10.0, kInf));
  CHECK_THROWS_AS(dispersive_lp_norm(1.0, 10.0, kInf), KinError);
  CHECK_THROWS_AS(dispersive_lp_norm(1.25, 1e3, kInf), KinError);
}

TEST_CASE("exponent fitting") {
  std::vector<std::pair<double, double>> exact, noisy, flat;
  std::mt19937_64 g(17);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int k = 0; k < 20; ++k) {
    const double t = std::pow(10.0, 0.15 * k);
    exact.emplace_back(t, 3 * std::pow(t, -1.5));
    noisy.emplace_back(t, 3 * std::pow(t, -1.5) * (1 + n(g)));
    flat.emplace_back(t, 2.0);
  }
  const FitResult a = fit_exponent(exact);
  CHECK(a.exponent == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(a.stderr_ < 1e-10);
  CHECK(std::abs(fit_exponent(noisy).exponent + 1.5) <= 0.03);
  CHECK(std::abs(fit_exponent(flat).exponent) <= 1e-12);
  std::vector<std::pair<double, double>> short_span(exact.begin(), exact.begin() + 5);
  CHECK_THROWS_AS(fit_exponent(short_span), KinError);
}
