#include "kinspec/dispersion.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>

namespace kinspec {

namespace {

constexpr int kEE = 0, kEO = 1, kOE = 2;

int sector_of_moment(int i) {
  if (i == 1 || i == 4) return kEE;
  if (i == 2) return kOE;
  if (i == 3) return kEO;
  throw KinError("config", "moment index must be 1..4");
}

}  // namespace

int d0_label(int j) { return j; }
int d1_label(int j) { return j == 0 ? 2 : (j < 0 ? 4 : 6); }

DispersionContext::DispersionContext(const ModeContext& ctx, double s, double eps) : ctx_(&ctx), s_(s), eps_(eps) {
  ee_ = make_pencil(kEE, true);
  oe_ = make_pencil(kOE, true);
  eo_ = make_pencil(kEO, true);
  b2_ = make_pencil(kOE, false);
}

CVec DispersionContext::v1chi(int i, int sector) const {
  const VelocityBlock& vb = ctx_->blocks[sector];
  Vec ci = vb.basis->restrict(Vec(ctx_->coll->chi.col(i)));
  return vb.v1.cwiseProduct(ci).cast<cplx>();
}

DispersionContext::Pencil DispersionContext::make_pencil(int sector, bool p1_range) const {
  const VelocityBlock& vb = ctx_->blocks[sector];
  const int d = vb.nvel();
  Pencil p;
  Mat z;
  if (p1_range) {
    std::vector<Vec> cs;
    for (int j = 0; j < 5; ++j) {
      Vec cj = vb.basis->restrict(Vec(ctx_->coll->chi.col(j)));
      if (cj.norm() > 0.5) cs.push_back(cj);
    }
    Mat cm(d, static_cast<int>(cs.size()));
    for (size_t k = 0; k < cs.size(); ++k) cm.col(static_cast<int>(k)) = cs[k];
    Eigen::HouseholderQR<Mat> qr(cm);
    Mat q = qr.householderQ();
    z = q.rightCols(d - cm.cols());
  } else {
    z = Mat::Identity(d, d);
  }
  CMat b = (z.transpose() * vb.l * z).cast<cplx>();
  CMat v1z = (z.transpose() * vb.v1.asDiagonal() * z).cast<cplx>();
  b -= kI * eps_ * s_ * v1z;
  EigenSystem es = eig_general(b, false);
  p.lambda = es.values;
  p.right = es.right;
  p.rinv = es.right.partialPivLu().inverse();
  p.basis = z.cast<cplx>();
  p.op = b;
  return p;
}

cplx DispersionContext::moment(const Pencil& p, const CVec& a, const CVec& b, cplx shift) const {
  // bᵀ Z (B - shift)⁻¹ Zᵀ a with the eigen factorization B = V Λ V⁻¹.
  CVec ra = p.rinv * (p.basis.transpose() * a);
  CVec lb = p.right.transpose() * (p.basis.transpose() * b);
  cplx acc = 0;
  for (int k = 0; k < p.lambda.size(); ++k) acc += lb(k) * ra(k) / (p.lambda(k) - shift);
  return acc;
}

const DispersionContext::Pencil& DispersionContext::pencil_for(int i) const {
  const int sec = sector_of_moment(i);
  return sec == kEE ? ee_ : (sec == kOE ? oe_ : eo_);
}

cplx DispersionContext::resolvent_moment(int i, int j, cplx z) const {
  const int si = sector_of_moment(i), sj = sector_of_moment(j);
  if (si != sj) return 0.0;
  return moment(pencil_for(i), v1chi(i, si), v1chi(j, si), eps_ * z);
}

cplx DispersionContext::resolvent_moment_direct(int i, int j, cplx z, double* residual) const {
  const int si = sector_of_moment(i), sj = sector_of_moment(j);
  if (si != sj) {
    if (residual) *residual = 0;
    return 0.0;
  }
  const Pencil& p = pencil_for(i);
  CMat m = p.op - eps_ * z * CMat::Identity(p.op.rows(), p.op.cols());
  CVec rhs = p.basis.transpose() * v1chi(i, si);
  Eigen::PartialPivLU<CMat> lu(m);
  CVec x = lu.solve(rhs);
  if (residual) *residual = (m * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (!x.allFinite()) throw KinError("resolvent-singular", "resolvent factorization failed");
  return (p.basis.transpose() * v1chi(j, si)).transpose() * x;
}

cplx DispersionContext::r0(cplx z) const {
  const VelocityBlock& vb = ctx_->blocks[kOE];
  CVec c2 = vb.c2.cast<cplx>();
  return eps_ * moment(b2_, c2, c2, eps_ * z);
}

CVec DispersionContext::high_freq_profile(cplx z) const {
  const VelocityBlock& vb = ctx_->blocks[kOE];
  CMat m = eps_ * z * CMat::Identity(b2_.op.rows(), b2_.op.cols()) - b2_.op;
  return m.partialPivLu().solve(CVec(vb.c2.cast<cplx>()));
}

cplx DispersionContext::d0(cplx z) const {
  const double s = s_, e = eps_, s2 = s * s;
  const cplx r11 = resolvent_moment(1, 1, z), r44 = resolvent_moment(4, 4, z);
  const cplx r14 = resolvent_moment(1, 4, z), r41 = resolvent_moment(4, 1, z);
  const cplx a = kI * s;
  const cplx bq = kI * (s + 1 / s);
  const cplx c = z - e * s2 * r11;
  const cplx d = kI * s * std::sqrt(2.0 / 3) - e * s2 * r41;
  const cplx f = kI * s * std::sqrt(2.0 / 3) - e * s2 * r14;
  const cplx g = z - e * s2 * r44;
  // det [[z, a, 0], [bq, c, d], [0, f, g]]
  return z * (c * g - d * f) - a * (bq * g);
}

cplx DispersionContext::d1(cplx z) const {
  const double s2 = s_ * s_;
  const cplx r22 = resolvent_moment(2, 2, z);
  return z * z * z - eps_ * s2 * r22 * z * z + (1 + s2) * z - eps_ * s2 * s2 * r22;
}

cplx DispersionContext::d2(cplx z) const { return z * z - r0(z) * z + s_ * s_; }

namespace {

template <class Map, class Res>
RootResult contract(cplx z0, Map map, Res scaled_residual, const RootOptions& opts) {
  RootResult rr;
  cplx z = z0;
  double last_step = 1e300;
  int stalls = 0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const cplx zn = z + opts.damping * (map(z) - z);
    const double step = std::abs(zn - z);
    z = zn;
    rr.iterations = it;
    if (!std::isfinite(std::abs(z))) throw KinError("contraction-divergence", "iterate is not finite");
    if (step <= 4e-16 * (1 + std::abs(z))) break;
    if (step >= last_step) ++stalls;
    if (stalls > 20) break;
    last_step = step;
  }
  rr.z = z;
  rr.residual = scaled_residual(z);
  if (rr.residual > opts.root_tol) {
    // Newton polish with a centred difference derivative.
    for (int it = 0; it < 30 && rr.residual > opts.root_tol; ++it) {
      const double h = 1e-6 * (1 + std::abs(z));
      auto f = [&](cplx w) { return map(w) - w; };
      const cplx fz = f(z);
      const cplx df = (f(z + h) - f(z - h)) / (2 * h);
      z -= fz / df;
      rr.residual = scaled_residual(z);
    }
    rr.z = z;
    rr.polished = true;
  }
  if (rr.residual > opts.root_tol)
    throw KinError("contraction-divergence", "dispersion residual " + std::to_string(rr.residual) + " above root_tol");
  return rr;
}

}  // namespace

RootResult solve_root_D0(int j, const DispersionContext& dc, const RootOptions& opts) {
  const double s = dc.s();
  const cplx eta = eta_of_s(j, s);
  const cplx denom = 3.0 * eta * eta + 1.0 + 5 * s * s / 3;
  auto map = [&](cplx z) { return z - dc.d0(z) / denom; };
  auto res = [&](cplx z) { return std::abs(dc.d0(z)) / (1 + std::pow(std::abs(z), 3) + (1 + s * s) * std::abs(z)); };
  return contract(eta, map, res, opts);
}

RootResult solve_root_D1(int j, const DispersionContext& dc, const RootOptions& opts) {
  if (j < -1 || j > 1) throw KinError("config", "D1 root index must be -1, 0 or 1");
  const double s = dc.s();
  const cplx gamma = double(j) * kI * std::sqrt(1 + s * s);
  const cplx denom = 3.0 * gamma * gamma + 1.0 + s * s;
  auto map = [&](cplx z) { return z - dc.d1(z) / denom; };
  auto res = [&](cplx z) { return std::abs(dc.d1(z)) / (1 + std::pow(std::abs(z), 3) + (1 + s * s) * std::abs(z)); };
  return contract(gamma, map, res, opts);
}

RootResult solve_root_D2(int j, const DispersionContext& dc, const RootOptions& opts) {
  if (j != -1 && j != 1) throw KinError("config", "D2 root index must be -1 or 1");
  const double s = dc.s();
  auto map = [&](cplx z) {
    const cplx r = dc.r0(z);
    // G_j = (R0 + j·2is·√(1 - R0²/(4s²)))/2, the branch of √(R0² - 4s²) continuous at R0 = 0.
    return 0.5 * (r + double(j) * 2.0 * kI * s * std::sqrt(1.0 - r * r / (4 * s * s)));
  };
  auto res = [&](cplx z) { return std::abs(dc.d2(z)) / (std::norm(z) + s * s); };
  return contract(double(j) * kI * s, map, res, opts);
}

HighFreqPair high_freq_eigpair(int label, const DispersionContext& dc, const RootOptions& opts) {
  if (label < 1 || label > 4) throw KinError("config", "high-frequency label must be 1..4");
  const int j = label <= 2 ? -1 : 1;
  const double s = dc.s(), eps = dc.eps();
  HighFreqPair hp;
  hp.label = label;
  hp.root = solve_root_D2(j, dc, opts);
  const cplx z = hp.root.z;
  hp.zeta = z - double(j) * kI * s;
  hp.beta = eps * z;
  const CVec g = dc.high_freq_profile(z);
  const cplx gg = g.transpose() * g;  // bilinear
  const cplx q = eps * eps * gg - 1.0 + eps * eps * s * s / (hp.beta * hp.beta);
  cplx c = std::sqrt(1.0 / q);
  if (std::abs(c - kI / std::sqrt(2.0)) > std::abs(-c - kI / std::sqrt(2.0))) c = -c;
  hp.c = c;
  const ModeContext& ctx = dc.mode_context();
  const bool oe = (label % 2) == 1;  // labels 1, 3 live in (o,e); 2, 4 are their v2 <-> v3 images in (e,o)
  const int sector = oe ? 2 : 1;
  const VelocityBlock& vb = ctx.blocks[sector];
  CVec w;
  if (oe) {
    w = eps * c * g;
  } else {
    // Same profile transported by the swap v2 <-> v3, re-expanded in the (e,o) basis.
    const VelocityBlock& src = ctx.blocks[2];
    CVec full = src.basis->lift(CVec(g));
    const VelocityQuadrature& qd = ctx.coll->quad;
    CVec swapped(full.size());
    for (int i = 0; i < qd.size(); ++i) {
      auto a = qd.axis_index(i);
      swapped(qd.index(a[0], a[2], a[1])) = full(i);
    }
    w = eps * c * vb.basis->restrict(swapped);
  }
  CVec x(vb.dim());
  x.head(vb.nvel()) = w;
  // (o,e): [X3, Y2] = [c, iεs c/β];  (e,o): [X2, Y3] = [-c, iεs c/β]
  x(vb.nvel()) = oe ? c : -c;
  x(vb.nvel() + 1) = kI * eps * s * c / hp.beta;
  ModeOperator tmp;
  tmp.ctx = &ctx;
  tmp.sectored = true;
  tmp.s = s;
  tmp.eps = eps;
  for (const auto& b : ctx.blocks) tmp.blocks.push_back({&b, CMat()});
  hp.vec = tmp.lift(sector, x);
  return hp;
}

}  // namespace kinspec
