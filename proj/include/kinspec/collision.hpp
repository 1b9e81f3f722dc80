#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "kinspec/quadrature.hpp"
#include "kinspec/sectors.hpp"

namespace kinspec {

/// How the integrable 1/|v-w| singularity on the diagonal of K is discretized.
enum class DiagonalRule {
  Calibrated,  // diagonal chosen so K is exact on a Gaussian bump centred at each node
  Ball         // leading singularity integrated analytically over a ball of cell volume
};

const char* diagonal_rule_name(DiagonalRule r);
DiagonalRule diagonal_rule_from_name(const std::string& name);

struct CollisionOptions {
  DiagonalRule rule = DiagonalRule::Calibrated;
  double bump_width = 2.0;  // bump radius in units of the local cell size W_i^{1/3}
  double nullspace_tol = 1e-8;
  double solve_tol = 1e-10;
};

/// Collision frequency ν(v) of the hard-sphere operator.
double eval_nu(const Vec3& v);
/// Kernel k(v,w) of the compact part K; throws "coincident-nodes" for v ≈ w.
double eval_kernel(const Vec3& v, const Vec3& w);
/// ∫ k(v,w) exp(-|w-v|²/(2σ²)) dw by Gauss-Legendre quadrature in polar coordinates about v.
double kernel_bump_integral(const Vec3& v, double sigma);

/// Discretized L = K - ν in the symmetric representation u_i = √W_i f(v_i), in which
/// the quadrature inner product is the Euclidean one.
struct CollisionMatrices {
  VelocityQuadrature quad;
  CollisionOptions opts;
  Vec nu_diag;
  Mat k_mat;
  Mat l_mat;                 // symmetrized and deflated
  Mat chi;                   // n x 5, columns χ0..χ4, orthonormal
  double gap_mu = 0;
  double l_norm = 0;         // spectral norm of the undeflated L
  double nu0 = 0, nu1 = 0;   // fitted linear-growth constants of ν
  std::array<double, 5> raw_residual{};  // ‖Lχ_j‖/‖L‖ before deflation
  std::array<double, 5> residual{};      // same after deflation

  // Reflection-parity sectors of L (axes v1, v2, v3) with Cholesky factors of -L + P0.
  std::vector<SectorBasis> sectors;
  std::vector<Eigen::LLT<Mat>> factors;

  int size() const { return quad.size(); }
  Vec chi_vec(int j) const { return chi.col(j); }

  template <class V>
  V project_P0(const V& f) const {
    V out = V::Zero(f.size());
    for (int j = 0; j < 5; ++j) out += chi.col(j).template cast<typename V::Scalar>() * chi.col(j).dot(f);
    return out;
  }
  template <class V>
  V project_P1(const V& f) const { return f - project_P0(f); }
  /// P_d f = (f, χ0) χ0.
  template <class V>
  V project_Pd(const V& f) const { return chi.col(0).template cast<typename V::Scalar>() * chi.col(0).dot(f); }
  /// Momentum moments (f, v_k χ0), k = 1..3.
  Eigen::Vector3d apply_Pm(const Vec& f) const;

  /// f with P0 f = 0 and L f = P1 g.
  Vec solve_Linv_P1(const Vec& g) const;
  /// Multiplication by v_axis in the symmetric representation.
  Vec times_v(int axis, const Vec& f) const;
};

CollisionMatrices assemble_collision(const VelocityQuadrature& q, const CollisionOptions& opts = {});

/// Rebuilds sector factorizations, spectra and residual metrics from k_mat/nu_diag/l_mat.
void finalize_collision(CollisionMatrices& c);

/// Moments (L⁻¹P1(v1χ_i), v1χ_j).
struct MacroMoments {
  double m11 = 0, m22 = 0, m33 = 0, m44 = 0, m14 = 0, m41 = 0;
  double kappa0 = 0, kappa1 = 0;
};

double macro_moment(const CollisionMatrices& c, int i, int j);
MacroMoments transport_coefficients(const CollisionMatrices& c);

}  // namespace kinspec
