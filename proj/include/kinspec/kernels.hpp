#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kinspec/types.hpp"

namespace kinspec {

enum class SymbolKind { Quadratic, Mixed, Dispersive };
const char* symbol_kind_name(SymbolKind k);

/// Radial symbols on ℝ³. Quadratic: |ξ|^m e^{-|ξ|² t}. Mixed: |ξ|^{m+j} e^{p(ξ)t} χ(ξ) with
/// p(ξ) = -|ξ|⁴/(1+|ξ|²) and χ the smooth cutoff (1 on |ξ| ≤ 1, 0 on |ξ| ≥ 2).
/// Dispersive: e^{-i√(1+|ξ|²)t}(1+|ξ|²)^{-a}.
struct SymbolSpec {
  SymbolKind kind = SymbolKind::Quadratic;
  int d = 3;
  int m = 0;
  int j = 0;
  double a = 1.25;
};

/// Smooth cutoff built from the exponential bump.
double smooth_cutoff(double s);

/// ‖∫ e^{ix·ξ} σ(ξ,t) dξ‖_{L^p_x} for quadratic and mixed symbols.
double kernel_lp_norm(const SymbolSpec& spec, double t, double p);
/// ‖∫ σ(ξ,t)² dξ‖^{1/2}·(2π)^{3/2}: the Plancherel value of the p = 2 norm.
double kernel_plancherel(const SymbolSpec& spec, double t);

struct DispersiveOptions {
  double t_max = 100;
  double s_split = 4;       // contour leaves the real axis here
  int r_samples = 600;      // sup search grid for p = ∞
};

/// Value of the dispersive kernel at radius r.
cplx dispersive_kernel(double a, double t, double r, const DispersiveOptions& opts = {});
double dispersive_lp_norm(double a, double t, double p, const DispersiveOptions& opts = {});

struct FitResult {
  double exponent = 0;
  double stderr_ = 0;
  double intercept = 0;
  int n = 0;
};

/// Ordinary least squares of log y on log x.
FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Same, requiring ≥ 6 samples over ≥ min_decades decades ("insufficient-span").
FitResult fit_exponent(const std::vector<std::pair<double, double>>& samples, double min_decades = 1.5);

}  // namespace kinspec
