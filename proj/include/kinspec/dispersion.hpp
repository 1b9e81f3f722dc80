#pragma once

#include "kinspec/mode.hpp"

namespace kinspec {

struct RootOptions {
  double root_tol = 1e-12;
  int max_iter = 200;
  double damping = 1.0;  // relaxation of the fixed-point update
};

/// Result of a dispersion root solve with its residual certificate.
struct RootResult {
  cplx z;
  double residual = 0;        // |D(z)| (relative to the scale of the terms for D2)
  int iterations = 0;
  bool polished = false;      // true when the contraction stalled and Newton finished the job
};

/// Cached spectral factorizations of the resolvents entering the dispersion functions at fixed (s, ε).
/// R_ij uses (L - εz - iεs P1 v1 P1)⁻¹ on the P1 range; R0 uses (L - iεs v1 - εz)⁻¹ in the (o,e) sector.
class DispersionContext {
 public:
  DispersionContext(const ModeContext& ctx, double s, double eps);

  double s() const { return s_; }
  double eps() const { return eps_; }

  /// R_ij(εz, εs) for i,j in {1,2,3,4}.
  cplx resolvent_moment(int i, int j, cplx z) const;
  /// Same moment by a direct dense solve, plus the relative residual of that solve.
  cplx resolvent_moment_direct(int i, int j, cplx z, double* residual = nullptr) const;
  /// ε((B̃ - εz)⁻¹χ2, χ2).
  cplx r0(cplx z) const;
  /// (β - B̃)⁻¹χ2 in the (o,e) sector, β = εz.
  CVec high_freq_profile(cplx z) const;

  cplx d0(cplx z) const;
  cplx d1(cplx z) const;
  cplx d2(cplx z) const;

  const ModeContext& mode_context() const { return *ctx_; }

 private:
  struct Pencil {
    CVec lambda;  // eigenvalues of the reduced operator
    CMat right;   // V
    CMat rinv;    // V⁻¹
    CMat basis;   // columns of the reduced space inside the sector (real, stored complex)
    CMat op;      // reduced operator, kept for direct solves
  };
  Pencil make_pencil(int sector, bool p1_range) const;
  cplx moment(const Pencil& p, const CVec& a, const CVec& b, cplx shift) const;
  const Pencil& pencil_for(int i) const;
  CVec v1chi(int i, int sector) const;

  const ModeContext* ctx_;
  double s_, eps_;
  Pencil ee_, oe_, eo_, b2_;
};

RootResult solve_root_D0(int j, const DispersionContext& dc, const RootOptions& opts = {});
/// j ∈ {-1,0,1}: roots of D1 near γ_j = j i√(1+s²).
RootResult solve_root_D1(int j, const DispersionContext& dc, const RootOptions& opts = {});
/// j ∈ {-1,1}: roots of D2 near j i s.
RootResult solve_root_D2(int j, const DispersionContext& dc, const RootOptions& opts = {});

/// Eigenpair of Ã_ε for the high-frequency labels 1..4 built from the D2 root.
struct HighFreqPair {
  int label = 0;
  cplx beta;
  cplx c;      // normalization coefficient
  cplx zeta;   // z - j i s
  CVec vec;    // full layout
  RootResult root;
};
HighFreqPair high_freq_eigpair(int label, const DispersionContext& dc, const RootOptions& opts = {});

/// Label of the low-frequency eigenvalue corresponding to the D0/D1 root index.
int d0_label(int j);
int d1_label(int j);

}  // namespace kinspec
