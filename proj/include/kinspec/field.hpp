#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kinspec/semigroup.hpp"

namespace kinspec {

/// Radial discretization of ξ ∈ ℝ³: ∫ F(|ξ|) dξ ≈ 4π Σ w_k s_k² F(s_k).
struct RadialXiGrid {
  std::vector<double> s;
  std::vector<double> w;
  int size() const { return static_cast<int>(s.size()); }
};

/// Geometric shells on [smin, smax] with trapezoid weights in ln s.
RadialXiGrid make_radial_grid(double smin, double smax, int n);
/// Default grid: [1e-2, max(20, 2 r1/eps_min)].
RadialXiGrid default_radial_grid(double eps_min, int n, const Regimes& reg = {});

enum class DataKind { WellPrepared, Generic, Microscopic };
const char* data_kind_name(DataKind k);
DataKind data_kind_from_name(const std::string& name);

/// Mode-level initial data at ξ = s e1: profile ρ(s) = exp(-s²/(2σ²)) times fixed structures.
struct InitialDataSpec {
  DataKind kind = DataKind::Generic;
  double width = 1.0;  // σ
  // Macroscopic amplitudes of f0 = n s χ0 + m·v χ0 + q χ4 (+ micro part); the density carries a factor s.
  double n = 0, q = 0;
  std::array<double, 3> m{};
  // Coefficients of P1(v1χ2) and P1(v1χ4) in the microscopic part of f0.
  double micro2 = 0, micro4 = 0;
  // Transverse E0 (e2, e3) and B0 (e2, e3); the longitudinal E0 follows from the Gauss law.
  std::array<double, 2> e{}, b{};

  double profile(double s) const { return std::exp(-s * s / (2 * width * width)); }
  /// (f0, E0, B0) in physical layout.
  CVec physical(const CollisionMatrices& c, double s) const;
  /// (f0, ω×E0, ω×B0) in mode layout.
  CVec mode(const CollisionMatrices& c, double s) const;
};

struct DataParams {
  double width = 1.0;
  bool zero_b = false;  // generic data with B0 = 0
};

/// Default structures per kind. Well-prepared data satisfy all constraints of the initial
/// layer-free class; microscopic data have P0 f0 = 0.
InitialDataSpec make_initial(DataKind kind, const DataParams& p = {});

struct ConstraintReport {
  double gauss = 0;         // |i s E1 - (f0, χ0)|
  double div_b = 0;         // |B1|
  double micro_p0 = 0;      // ‖P0 f0‖/‖f0‖ for microscopic data
  double ampere = 0;        // |m0 - i s ω×B0| (well-prepared)
  double momentum_long = 0; // |m1| (well-prepared)
  double state_eq = 0;      // |(1 + s⁻²) n + √(2/3) q| (well-prepared)
  double transverse_e = 0;  // |E⊥| (well-prepared)
};
ConstraintReport check_constraints(const CollisionMatrices& c, const InitialDataSpec& d, double s);
/// Throws "constraint-violation" naming the first constraint above tol on the grid.
void validate_initial(const CollisionMatrices& c, const InitialDataSpec& d, const RadialXiGrid& g, double tol = 1e-10);

struct GlobalNorms {
  double l2 = 0;
  double linf = 0;  // (2π)^{-3/2} 4π ∫ s² ‖·‖ ds
  bool coverage_warning = false;
};
GlobalNorms global_norms(const RadialXiGrid& g, const std::vector<double>& mode_norms);

/// Mode state of the linear NSMF system at ξ = s e1.
struct NsmfState {
  double t = 0;
  cplx n, q;
  std::array<cplx, 3> m{}, e{}, b{};
};

struct OdeOptions {
  double ode_tol = 1e-10;
  long max_steps = 2000000;
};

/// Initial NSMF state from a mode-layout V0 by the projection of the limit system.
NsmfState nsmf_initial(const CollisionMatrices& c, const CVec& v0, double s);
/// Integrates the reduced mode ODEs (transverse momentum and q - √(2/3) n) with dopri5
/// and rebuilds n, E, B from the constraints.
std::vector<NsmfState> nsmf_ode_solve(const MacroMoments& mm, const NsmfState& init, double s,
                                      const std::vector<double>& times, const OdeOptions& opts = {});
/// The same macroscopic fields read off a physical-layout state.
NsmfState nsmf_from_physical(const CollisionMatrices& c, const CVec& phys, double t);
/// Relative distance between two states over all components.
double nsmf_distance(const NsmfState& a, const NsmfState& b);

}  // namespace kinspec
