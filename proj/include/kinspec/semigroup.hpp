#pragma once

#include <vector>

#include "kinspec/mode.hpp"

namespace kinspec {

/// Regime constants separating the low (εs ≤ r0) and high (εs ≥ r1) frequency pictures.
struct Regimes {
  double r0 = 0.1;
  double r1 = 5.0;
};

struct PropagatorOptions {
  double recon_tol = 1e-8;
};

/// e^{(t/ε²)Ã_ε(s e1)} from the block eigensystems, with a Padé fallback per block
/// when V diag(λ) V⁻¹ does not reproduce the block to recon_tol.
class ModePropagator {
 public:
  explicit ModePropagator(const ModeSpectrum& spec, const PropagatorOptions& opts = {});

  /// U(t) for mode-layout U0.
  CVec propagate(const CVec& u0, double t) const;
  /// U at each of `times`, with the eigen-coefficients of U0 computed once.
  std::vector<CVec> propagate_many(const CVec& u0, const std::vector<double>& times) const;
  /// Padé exponential of every block (independent of the eigensystem).
  CVec propagate_pade(const CVec& u0, double t) const;
  /// Coefficients of U0 on the eigenvectors of one block (V⁻¹ x).
  CVec coefficients(int block, const CVec& u0) const;

  const ModeOperator& op() const { return *op_; }
  const ModeSpectrum& spectrum() const { return *spec_; }
  bool any_fallback() const;
  double recon_residual() const { return recon_; }

 private:
  struct Block {
    CVec lambda;
    CMat v, vinv;
    bool fallback = false;
  };
  const ModeOperator* op_;
  const ModeSpectrum* spec_;
  std::vector<Block> blocks_;
  double recon_ = 0;
};

struct S123 {
  CVec s1, s2, s3;
};

/// Spectral split of the exact solution. `low` and `high` are the labeled branches of
/// match_branches / match_high_branches (either may be empty outside its regime).
S123 decompose_S123(const ModePropagator& prop, const std::vector<SpectralBranch>& low,
                    const std::vector<SpectralBranch>& high, const CVec& u0, double t, const Regimes& reg = {});

/// Physical layout [f, E1, E2, E3, B1, B2, B3] at ξ = s e1.
inline constexpr int kPhysFields = 6;

/// Q(ξ)U = (f, -iξ/|ξ|²(f,χ0) - ω×X, -ω×Y).
CVec q_map(const CollisionMatrices& c, const CVec& u, double s);
/// Inverse direction on the transverse part: (f, E, B) -> (f, ω×E, ω×B).
CVec to_mode_layout(const CollisionMatrices& c, const CVec& phys);
/// |i s E1 - (f, χ0)| for a physical-layout state.
double gauss_residual(const CollisionMatrices& c, const CVec& phys, double s);

/// Ỹ1(t,ξ): decay of the projections onto Λ0, Λ2, Λ3.
struct FluidModeSemigroup {
  double s = 1;
  std::array<double, 3> b{};      // b0, b2, b3
  std::array<CVec, 3> lambda;     // Λ0, Λ2, Λ3 in mode layout
  const CollisionMatrices* coll = nullptr;

  /// Ỹ1(t) V0 in mode layout.
  CVec apply_tilde(const CVec& v0, double t) const;
};

FluidModeSemigroup make_fluid_semigroup(const CollisionMatrices& c, const MacroMoments& m, double s);

/// Y1(t,ξ)U0 = Q Ỹ1 V0, physical layout.
CVec nsmf_mode_apply(const FluidModeSemigroup& fs, const CVec& v0, double t);

/// Σ_{j ≠ 0,2,3} e^{η_j t/ε - b_j t}(V0, Λ_j)_ξ Λ_j in mode layout.
CVec oscillation_part(const CollisionMatrices& c, const MacroMoments& m, const CVec& v0, double t, double s, double eps);

/// P_A U = (P0 f, X, Y), P_B U = (P1 f, 0, 0) in mode layout.
CVec project_PA(const CollisionMatrices& c, const CVec& u);
CVec project_PB(const CollisionMatrices& c, const CVec& u);

}  // namespace kinspec
