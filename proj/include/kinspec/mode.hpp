#pragma once

#include <array>
#include <vector>

#include "kinspec/collision.hpp"
#include "kinspec/linalg.hpp"

namespace kinspec {

// Mode state layout at ξ = s e1: U = [f (n_v), X2, X3, Y2, Y3], where X and Y are the
// transverse field coordinates in the basis {e2, e3}. Field offsets within the tail:
enum FieldSlot { kX2 = 0, kX3 = 1, kY2 = 2, kY3 = 3 };
inline constexpr int kFieldCount = 4;

inline constexpr double kSMin = 1e-4;

/// Restriction of L and the velocity multipliers to one parity sector of the reflections
/// v2 -> -v2, v3 -> -v3 (or to the full space when basis is null).
struct VelocityBlock {
  int p2 = 0, p3 = 0;
  const SectorBasis* basis = nullptr;
  Mat l;
  Vec v1;
  Vec c0, c2, c3;           // restricted χ0, χ2, χ3
  std::vector<int> fields;  // FieldSlot values carried by this block
  int nvel() const { return static_cast<int>(l.rows()); }
  int dim() const { return nvel() + static_cast<int>(fields.size()); }
};

/// Sector data shared by every mode operator built on one collision operator.
struct ModeContext {
  const CollisionMatrices* coll = nullptr;
  std::vector<SectorBasis> bases;    // (e,e), (e,o), (o,e), (o,o) in (p2,p3)
  std::vector<VelocityBlock> blocks; // same order
  VelocityBlock full;
  int n_full() const { return coll->size() + kFieldCount; }
  /// Sector index holding (p2, p3).
  static int sector_index(int p2, int p3) { return 2 * p2 + p3; }
};

ModeContext make_mode_context(const CollisionMatrices& c);

struct ModeBlock {
  const VelocityBlock* vb = nullptr;
  CMat a;
};

/// Ã_ε(s e1), stored either as the four parity blocks or as one dense block.
struct ModeOperator {
  double s = 1, eps = 0;
  const ModeContext* ctx = nullptr;
  std::vector<ModeBlock> blocks;
  bool sectored = true;

  int full_dim() const { return ctx->n_full(); }
  CMat dense() const;
  /// Gram matrix of (·,·)_ξ in the full layout.
  CMat metric() const;
  CVec lift(int b, const CVec& x) const;
  CVec restrict(int b, const CVec& u) const;
  CVec apply(const CVec& u) const;
};

ModeOperator assemble_mode(const ModeContext& ctx, double s, double eps, bool sectored = true);

/// Block matrix for one velocity block (exposed for the dispersion module and tests).
CMat mode_block_matrix(const VelocityBlock& vb, double s, double eps);

/// (U,V)_ξ = (f,g) + s⁻²(f,χ0)conj(g,χ0) + X·conj(X') + Y·conj(Y').
cplx weighted_inner(const CollisionMatrices& c, const CVec& u, const CVec& v, double s);
double weighted_norm(const CollisionMatrices& c, const CVec& u, double s);

inline constexpr int kUnlabeled = -100;

struct SpectralBranch {
  int label = kUnlabeled;
  cplx lambda;
  CVec eigvec;     // full layout (filled for labeled branches)
  CVec dual;       // left eigenvector, dual.adjoint() * eigvec = 1
  cplx predicted;
  double residual = 0;
  int block = -1;
  int column = -1;
};

struct ModeSpectrum {
  const ModeOperator* op = nullptr;
  std::vector<EigenSystem> sys;
  std::vector<SpectralBranch> branches;  // Re λ descending
  int count_above(double line) const;
  CVec right(const SpectralBranch& b) const;
  CVec left(const SpectralBranch& b) const;
};

ModeSpectrum eig_mode(const ModeOperator& op);

// Closed-form leading-order quantities of the low-frequency branches.
cplx eta_of_s(int j, double s);
double b_of_s(int j, double s, const MacroMoments& m);
/// Leading-order eigenvector Λ_j (ω = e1, W² = W⁴ = W⁶ = e2, W³ = W⁵ = W⁷ = e3).
CVec low_freq_eigvec(const CollisionMatrices& c, int j, double s);
/// Parity sector (index into ModeContext::blocks) of label j.
int label_sector(int j);

struct MatchOptions {
  double matching_tol = 1e-8;
};

/// Assigns labels −1..7 to the nine dominant eigenvalues (low regime).
std::vector<SpectralBranch> match_branches(ModeSpectrum& spec, const MacroMoments& m, const MatchOptions& opts = {});

/// Labels 1..4 for the four high-frequency eigenvalues: 1,2 near -iεs, 3,4 near +iεs.
std::vector<SpectralBranch> match_high_branches(ModeSpectrum& spec);

}  // namespace kinspec
