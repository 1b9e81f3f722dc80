#pragma once

#include <functional>
#include <vector>

#include "kinspec/field.hpp"
#include "kinspec/kernels.hpp"

namespace kinspec {

/// Geometric times on [ε²·10⁻², t_max], `per_decade` points per decade.
std::vector<double> make_time_grid(double eps, double t_max = 100, int per_decade = 40);

/// Global norms of a mode-level quantity at each time.
struct NormCurve {
  std::vector<double> t, l2, linf;
  bool coverage_warning = false;
  bool fallback_used = false;   // some shell needed the Padé propagator
  double max_contraction = 0;   // max over shells and times of ‖U(t)‖_ξ/‖U0‖_ξ - 1
};

struct SweepOptions {
  int workers = 1;
  double skip_tol = 1e-16;  // shells whose data norm is below skip_tol·max are skipped
};

/// e^{tA/ε²}U0 - Y1 P_A U0 (with the initial layer U^osc + e^{tA/ε²}P_B U0 removed when asked).
NormCurve fluid_error_first_order(const ModeContext& ctx, const MacroMoments& mm, const InitialDataSpec& data,
                                  double eps, const std::vector<double>& times, const RadialXiGrid& grid,
                                  bool subtract_layer, const SweepOptions& so = {});

/// (1/ε)e^{tA/ε²}U0 - Y1 Z0 with Z0 = (P0(i s v1 L⁻¹f0), 0, 0); needs P0 f0 = 0.
/// subtract_osc also removes the oscillating modes of Z0 (diagnostic).
NormCurve fluid_error_second_order(const ModeContext& ctx, const MacroMoments& mm, const InitialDataSpec& data,
                                   double eps, const std::vector<double>& times, const RadialXiGrid& grid,
                                   const SweepOptions& so = {}, bool subtract_osc = false);

enum class Projector { PA, PB };

/// ‖P e^{tA/ε²}U0‖ over the grid.
NormCurve projected_norm(const ModeContext& ctx, const InitialDataSpec& data, double eps, Projector proj,
                         const std::vector<double>& times, const RadialXiGrid& grid, const SweepOptions& so = {});

struct DecayFit {
  double exponent = 0;
  double stderr_ = 0;
  double t_lo = 0, t_hi = 0;
  int n = 0;
};

/// OLS of log L² norm against log(1+t) over [t_lo, t_hi], after the transient t > 10ε²/d_fit.
DecayFit decay_measure(const NormCurve& c, double eps, double d_fit, double t_lo = 5, double t_hi = 100);

/// Geometric mean of a/b over the window; a and b share the time grid of `times`.
double prefactor_ratio(const std::vector<double>& ta, const std::vector<double>& a, const std::vector<double>& tb,
                       const std::vector<double>& b, double t_lo, double t_hi);

struct S3Decay {
  double rate = 0;            // fitted d in ‖S3‖ ~ e^{-d τ}, τ = t/ε²
  double recon = 0;           // max relative |S1+S2+S3 - exact|
  double max_contraction = 0; // max ‖U(t)‖_ξ/‖U0‖_ξ - 1
  double gauss = 0;           // max Gauss-law residual of Q U(t)
  bool fallback = false;
};

/// S3 decay at fixed (s, ε) for a seeded random U0, sampled at τ ∈ [tau_lo, tau_hi].
S3Decay s3_decay(const ModeContext& ctx, const MacroMoments& mm, double s, double eps, unsigned seed,
                 double tau_lo = 1, double tau_hi = 10, const Regimes& reg = {});

/// Random mode-layout vector (deterministic in the seed).
CVec random_mode_vector(int n, unsigned seed);

/// Runs fn(k) for k in [0, n) on `workers` threads; fn must write only to slot k.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace kinspec
