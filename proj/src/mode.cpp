#include "kinspec/mode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kinspec {

namespace {

VelocityBlock make_block(const CollisionMatrices& c, const SectorBasis* sb, int p2, int p3) {
  VelocityBlock vb;
  vb.p2 = p2;
  vb.p3 = p3;
  vb.basis = sb;
  Vec v1(c.size());
  for (int i = 0; i < c.size(); ++i) v1(i) = c.quad.nodes[i](0);
  if (sb) {
    vb.l = sb->restrict_matrix(c.l_mat);
    vb.v1 = sb->restrict_diag(v1).diagonal();
    vb.c0 = sb->restrict(Vec(c.chi.col(0)));
    vb.c2 = sb->restrict(Vec(c.chi.col(2)));
    vb.c3 = sb->restrict(Vec(c.chi.col(3)));
    if (p2 == 0 && p3 == 1) vb.fields = {kX2, kY3};
    if (p2 == 1 && p3 == 0) vb.fields = {kX3, kY2};
  } else {
    vb.l = c.l_mat;
    vb.v1 = v1;
    vb.c0 = c.chi.col(0);
    vb.c2 = c.chi.col(2);
    vb.c3 = c.chi.col(3);
    vb.fields = {kX2, kX3, kY2, kY3};
  }
  return vb;
}

int field_pos(const VelocityBlock& vb, int slot) {
  for (size_t k = 0; k < vb.fields.size(); ++k)
    if (vb.fields[k] == slot) return vb.nvel() + static_cast<int>(k);
  return -1;
}

}  // namespace

ModeContext make_mode_context(const CollisionMatrices& c) {
  ModeContext ctx;
  ctx.coll = &c;
  ctx.bases = reflection_sectors(c.quad, {1, 2});
  for (int k = 0; k < 4; ++k) {
    const SectorBasis& sb = ctx.bases[k];
    ctx.blocks.push_back(make_block(c, &sb, sb.parity[0], sb.parity[1]));
  }
  ctx.full = make_block(c, nullptr, -1, -1);
  return ctx;
}

CMat mode_block_matrix(const VelocityBlock& vb, double s, double eps) {
  const int nv = vb.nvel();
  CMat a = CMat::Zero(vb.dim(), vb.dim());
  a.topLeftCorner(nv, nv) = vb.l.cast<cplx>();
  for (int i = 0; i < nv; ++i) a(i, i) -= kI * eps * s * vb.v1(i);
  // -i(ε/s) v1 P_d
  if (vb.c0.norm() > 0) {
    CVec v1c0 = (vb.v1.cwiseProduct(vb.c0)).cast<cplx>();
    a.topLeftCorner(nv, nv) -= (kI * eps / s) * v1c0 * vb.c0.transpose().cast<cplx>();
  }
  const int x2 = field_pos(vb, kX2), x3 = field_pos(vb, kX3), y2 = field_pos(vb, kY2), y3 = field_pos(vb, kY3);
  if (x2 >= 0) {
    a.block(0, x2, nv, 1) = (-eps * vb.c3).cast<cplx>();
    a.block(x2, 0, 1, nv) = (eps * vb.c3.transpose()).cast<cplx>();
  }
  if (x3 >= 0) {
    a.block(0, x3, nv, 1) = (eps * vb.c2).cast<cplx>();
    a.block(x3, 0, 1, nv) = (-eps * vb.c2.transpose()).cast<cplx>();
  }
  if (x2 >= 0 && y3 >= 0) {
    a(x2, y3) = -kI * eps * s;
    a(y3, x2) = -kI * eps * s;
  }
  if (x3 >= 0 && y2 >= 0) {
    a(x3, y2) = kI * eps * s;
    a(y2, x3) = kI * eps * s;
  }
  return a;
}

ModeOperator assemble_mode(const ModeContext& ctx, double s, double eps, bool sectored) {
  if (!(s > 0)) throw KinError("config", "mode operator needs s > 0");
  ModeOperator op;
  op.s = s;
  op.eps = eps;
  op.ctx = &ctx;
  op.sectored = sectored;
  if (sectored)
    for (const auto& vb : ctx.blocks) op.blocks.push_back({&vb, mode_block_matrix(vb, s, eps)});
  else
    op.blocks.push_back({&ctx.full, mode_block_matrix(ctx.full, s, eps)});
  return op;
}

CVec ModeOperator::lift(int b, const CVec& x) const {
  const VelocityBlock& vb = *blocks[b].vb;
  const int nv = ctx->coll->size();
  CVec u = CVec::Zero(full_dim());
  if (vb.basis)
    u.head(nv) = vb.basis->lift(CVec(x.head(vb.nvel())));
  else
    u.head(nv) = x.head(nv);
  for (size_t k = 0; k < vb.fields.size(); ++k) u(nv + vb.fields[k]) = x(vb.nvel() + static_cast<int>(k));
  return u;
}

CVec ModeOperator::restrict(int b, const CVec& u) const {
  const VelocityBlock& vb = *blocks[b].vb;
  const int nv = ctx->coll->size();
  CVec x(vb.dim());
  if (vb.basis)
    x.head(vb.nvel()) = vb.basis->restrict(CVec(u.head(nv)));
  else
    x.head(nv) = u.head(nv);
  for (size_t k = 0; k < vb.fields.size(); ++k) x(vb.nvel() + static_cast<int>(k)) = u(nv + vb.fields[k]);
  return x;
}

CVec ModeOperator::apply(const CVec& u) const {
  CVec out = CVec::Zero(full_dim());
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) out += lift(b, blocks[b].a * restrict(b, u));
  return out;
}

CMat ModeOperator::dense() const {
  if (!sectored) return blocks[0].a;
  const int n = full_dim();
  CMat out(n, n);
  CVec e = CVec::Zero(n);
  for (int j = 0; j < n; ++j) {
    e.setZero();
    e(j) = 1;
    out.col(j) = apply(e);
  }
  return out;
}

CMat ModeOperator::metric() const {
  const int nv = ctx->coll->size();
  CMat g = CMat::Identity(full_dim(), full_dim());
  CVec c0 = ctx->coll->chi.col(0).cast<cplx>();
  g.topLeftCorner(nv, nv) += c0 * c0.transpose() / (s * s);
  return g;
}

cplx weighted_inner(const CollisionMatrices& c, const CVec& u, const CVec& v, double s) {
  if (s < kSMin) throw KinError("degenerate-metric", "s below s_min");
  const int nv = c.size();
  CVec c0 = c.chi.col(0).cast<cplx>();
  const cplx uf = c0.dot(u.head(nv));  // (u, χ0) with χ0 real
  const cplx vf = c0.dot(v.head(nv));
  return v.dot(u) + uf * std::conj(vf) / (s * s);
}

double weighted_norm(const CollisionMatrices& c, const CVec& u, double s) {
  return std::sqrt(std::max(0.0, weighted_inner(c, u, u, s).real()));
}

int ModeSpectrum::count_above(double line) const {
  int n = 0;
  for (const auto& b : branches) n += b.lambda.real() > line;
  return n;
}

CVec ModeSpectrum::right(const SpectralBranch& b) const { return op->lift(b.block, sys[b.block].right.col(b.column)); }
CVec ModeSpectrum::left(const SpectralBranch& b) const { return op->lift(b.block, sys[b.block].left.col(b.column)); }

ModeSpectrum eig_mode(const ModeOperator& op) {
  ModeSpectrum sp;
  sp.op = &op;
  for (int b = 0; b < static_cast<int>(op.blocks.size()); ++b) {
    sp.sys.push_back(eig_general(op.blocks[b].a));
    const auto& es = sp.sys.back();
    for (int k = 0; k < es.values.size(); ++k) {
      SpectralBranch br;
      br.lambda = es.values(k);
      br.block = b;
      br.column = k;
      sp.branches.push_back(br);
    }
  }
  std::stable_sort(sp.branches.begin(), sp.branches.end(), [](const SpectralBranch& x, const SpectralBranch& y) {
    if (x.lambda.real() != y.lambda.real()) return x.lambda.real() > y.lambda.real();
    if (x.lambda.imag() != y.lambda.imag()) return x.lambda.imag() < y.lambda.imag();
    return x.block < y.block;
  });
  return sp;
}

cplx eta_of_s(int j, double s) {
  switch (j) {
    case -1: return -kI * std::sqrt(1 + 5 * s * s / 3);
    case 1: return kI * std::sqrt(1 + 5 * s * s / 3);
    case 0:
    case 2:
    case 3: return 0.0;
    case 4:
    case 5: return -kI * std::sqrt(1 + s * s);
    case 6:
    case 7: return kI * std::sqrt(1 + s * s);
    default: throw KinError("config", "label out of range");
  }
}

double b_of_s(int j, double s, const MacroMoments& m) {
  const double s2 = s * s, s4 = s2 * s2;
  switch (j) {
    case 0: return -3 * (s2 + s4) / (3 + 5 * s2) * m.m44;
    case -1:
    case 1: return -0.5 * s2 * m.m11 - s4 / (3 + 5 * s2) * m.m44;
    case 2:
    case 3: return -s4 / (1 + s2) * m.m22;
    case 4:
    case 5:
    case 6:
    // -∂_ε of the D1 root at ε = 0; the 1/(1+s²) factor is confirmed by the matched eigenvalues.
    case 7: return -0.5 * s2 / (1 + s2) * m.m22;
    default: throw KinError("config", "label out of range");
  }
}

int label_sector(int j) {
  if (j >= -1 && j <= 1) return ModeContext::sector_index(0, 0);
  if (j == 2 || j == 4 || j == 6) return ModeContext::sector_index(1, 0);
  if (j == 3 || j == 5 || j == 7) return ModeContext::sector_index(0, 1);
  throw KinError("config", "label out of range");
}

CVec low_freq_eigvec(const CollisionMatrices& c, int j, double s) {
  const int nv = c.size();
  CVec u = CVec::Zero(nv + kFieldCount);
  auto chi = [&](int k) { return CVec(c.chi.col(k).cast<cplx>()); };
  const double s2 = s * s;
  if (j == 0) {
    u.head(nv) = std::sqrt(2.0) * s2 / (std::sqrt(3 + 5 * s2) * std::sqrt(1 + s2)) * chi(0) -
                 std::sqrt(3 + 3 * s2) / std::sqrt(3 + 5 * s2) * chi(4);
  } else if (j == 1 || j == -1) {
    // With the -i v·ξ streaming sign, +χ1 pairs with η = -i√(1+5s²/3); the sign is flipped so Λ_j pairs with η_j.
    u.head(nv) = std::sqrt(1.5) * s / std::sqrt(3 + 5 * s2) * chi(0) - double(j) * std::sqrt(0.5) * chi(1) +
                 s / std::sqrt(3 + 5 * s2) * chi(4);
  } else if (j == 2 || j == 3) {
    const double nrm = 1 / std::sqrt(1 + s2);
    u.head(nv) = nrm * s * chi(j);
    u(nv + (j == 2 ? kY2 : kY3)) = -kI * nrm;
  } else if (j >= 4 && j <= 7) {
    const double nrm = 1 / std::sqrt(2 * (1 + s2));
    const cplx eta = eta_of_s(j, s);
    const bool w2 = (j == 4 || j == 6);
    u.head(nv) = nrm * chi(w2 ? 2 : 3);
    // X = η ω×W: e1×e2 = e3, e1×e3 = -e2.  Y = i s W.
    if (w2) {
      u(nv + kX3) = nrm * eta;
      u(nv + kY2) = nrm * kI * s;
    } else {
      u(nv + kX2) = -nrm * eta;
      u(nv + kY3) = nrm * kI * s;
    }
  } else {
    throw KinError("config", "label out of range");
  }
  return u;
}

namespace {

const std::array<std::array<int, 3>, 3> kSectorLabels = {{{-1, 0, 1}, {3, 5, 7}, {2, 4, 6}}};

}  // namespace

std::vector<SpectralBranch> match_branches(ModeSpectrum& spec, const MacroMoments& m, const MatchOptions& opts) {
  const ModeOperator& op = *spec.op;
  if (!op.sectored) throw KinError("ambiguous-match", "label matching needs the parity-sector operator");
  const CollisionMatrices& c = *op.ctx->coll;
  std::vector<SpectralBranch> out;
  double weakest_kept = 1e300;
  for (int b = 0; b < 3; ++b) {
    std::vector<SpectralBranch> cand;
    for (const auto& br : spec.branches)
      if (br.block == b && cand.size() < 3) cand.push_back(br);
    if (cand.size() < 3) throw KinError("ambiguous-match", "sector holds fewer than three eigenvalues");
    for (auto& br : cand) weakest_kept = std::min(weakest_kept, br.lambda.real());
    const auto& labels = kSectorLabels[b];
    std::array<int, 3> perm = {0, 1, 2}, best{}, second{};
    double bestc = 1e300, secondc = 1e300;
    do {
      double cost = 0;
      for (int k = 0; k < 3; ++k) cost += std::abs(cand[k].lambda - op.eps * eta_of_s(labels[perm[k]], op.s));
      if (cost < bestc) {
        secondc = bestc;
        second = best;
        bestc = cost;
        best = perm;
      } else if (cost < secondc) {
        secondc = cost;
        second = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (secondc - bestc < opts.matching_tol) {
      // Tie: prefer the assignment with the larger overlap against the leading-order eigenvectors.
      auto overlap = [&](const std::array<int, 3>& p) {
        double acc = 0;
        for (int k = 0; k < 3; ++k) {
          CVec u = spec.right(cand[k]);
          acc += std::abs(weighted_inner(c, u, low_freq_eigvec(c, labels[p[k]], op.s), op.s)) / weighted_norm(c, u, op.s);
        }
        return acc;
      };
      if (overlap(second) > overlap(best)) best = second;
    }
    for (int k = 0; k < 3; ++k) {
      SpectralBranch br = cand[k];
      br.label = labels[best[k]];
      br.eigvec = spec.right(br);
      br.dual = spec.left(br);
      br.predicted = op.eps * eta_of_s(br.label, op.s) - op.eps * op.eps * b_of_s(br.label, op.s, m);
      br.residual = std::abs(br.lambda - br.predicted);
      out.push_back(br);
    }
  }
  // The nine labeled eigenvalues must dominate everything else.
  for (const auto& br : spec.branches) {
    bool taken = false;
    for (const auto& o : out) taken = taken || (o.block == br.block && o.column == br.column);
    if (!taken && br.lambda.real() > weakest_kept)
      throw KinError("ambiguous-match", "an unlabeled eigenvalue lies above a labeled one");
  }
  std::sort(out.begin(), out.end(), [](const SpectralBranch& x, const SpectralBranch& y) { return x.label < y.label; });
  return out;
}

std::vector<SpectralBranch> match_high_branches(ModeSpectrum& spec) {
  const ModeOperator& op = *spec.op;
  if (!op.sectored) throw KinError("ambiguous-match", "label matching needs the parity-sector operator");
  std::vector<SpectralBranch> out;
  // Label 1/3 from the (o,e) sector, 2/4 from the (e,o) sector.
  const int sec[2] = {ModeContext::sector_index(1, 0), ModeContext::sector_index(0, 1)};
  for (int k = 0; k < 2; ++k) {
    std::vector<SpectralBranch> cand;
    for (const auto& br : spec.branches)
      if (br.block == sec[k] && cand.size() < 2) cand.push_back(br);
    if (cand.size() < 2) throw KinError("ambiguous-match", "sector holds fewer than two eigenvalues");
    if (cand[0].lambda.imag() > cand[1].lambda.imag()) std::swap(cand[0], cand[1]);
    for (int m = 0; m < 2; ++m) {
      SpectralBranch br = cand[m];
      br.label = (m == 0 ? 1 : 3) + k;
      br.eigvec = spec.right(br);
      br.dual = spec.left(br);
      br.predicted = (m == 0 ? -1.0 : 1.0) * kI * op.eps * op.s;
      br.residual = std::abs(br.lambda - br.predicted);
      out.push_back(br);
    }
  }
  std::sort(out.begin(), out.end(), [](const SpectralBranch& x, const SpectralBranch& y) { return x.label < y.label; });
  return out;
}

}  // namespace kinspec
