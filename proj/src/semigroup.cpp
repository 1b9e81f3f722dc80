#include "kinspec/semigroup.hpp"

#include <cmath>

#include <Eigen/LU>

namespace kinspec {

ModePropagator::ModePropagator(const ModeSpectrum& spec, const PropagatorOptions& opts)
    : op_(spec.op), spec_(&spec) {
  for (size_t b = 0; b < spec.sys.size(); ++b) {
    const CMat& a = op_->blocks[b].a;
    Block blk;
    blk.lambda = spec.sys[b].values;
    blk.v = spec.sys[b].right;
    blk.vinv = blk.v.partialPivLu().inverse();
    const CMat rec = blk.v * blk.lambda.asDiagonal() * blk.vinv;
    const double an = std::max(a.norm(), 1e-300);
    const double r = (rec - a).norm() / an;
    recon_ = std::max(recon_, r);
    blk.fallback = !(r <= opts.recon_tol) || !blk.vinv.allFinite();
    blocks_.push_back(std::move(blk));
  }
}

bool ModePropagator::any_fallback() const {
  for (const auto& b : blocks_)
    if (b.fallback) return true;
  return false;
}

CVec ModePropagator::coefficients(int block, const CVec& u0) const {
  return blocks_[block].vinv * op_->restrict(block, u0);
}

CVec ModePropagator::propagate(const CVec& u0, double t) const {
  if (t < 0) throw KinError("config", "propagation time must be non-negative");
  if (t == 0) return u0;
  const double tau = t / (op_->eps * op_->eps);
  CVec out = CVec::Zero(u0.size());
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) {
    const Block& blk = blocks_[b];
    const CVec x = op_->restrict(b, u0);
    CVec y;
    if (blk.fallback) {
      y = expm(op_->blocks[b].a * tau) * x;
    } else {
      CVec c = blk.vinv * x;
      for (int k = 0; k < c.size(); ++k) c(k) *= std::exp(blk.lambda(k) * tau);
      y = blk.v * c;
    }
    out += op_->lift(b, y);
  }
  return out;
}

std::vector<CVec> ModePropagator::propagate_many(const CVec& u0, const std::vector<double>& times) const {
  std::vector<CVec> out(times.size(), CVec::Zero(u0.size()));
  const double e2 = op_->eps * op_->eps;
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) {
    const Block& blk = blocks_[b];
    const CVec x = op_->restrict(b, u0);
    const CVec c0 = blk.fallback ? CVec() : CVec(blk.vinv * x);
    for (size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      if (t < 0) throw KinError("config", "propagation time must be non-negative");
      CVec y;
      if (t == 0) {
        y = x;
      } else if (blk.fallback) {
        y = expm(op_->blocks[b].a * (t / e2)) * x;
      } else {
        CVec c = c0;
        for (int j = 0; j < c.size(); ++j) c(j) *= std::exp(blk.lambda(j) * (t / e2));
        y = blk.v * c;
      }
      out[k] += op_->lift(b, y);
    }
  }
  return out;
}

CVec ModePropagator::propagate_pade(const CVec& u0, double t) const {
  CVec out = CVec::Zero(u0.size());
  const double tau = t / (op_->eps * op_->eps);
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b)
    out += op_->lift(b, expm(op_->blocks[b].a * tau) * op_->restrict(b, u0));
  return out;
}

namespace {

CVec branch_sum(const ModePropagator& prop, const std::vector<SpectralBranch>& br, const CVec& u0, double tau) {
  CVec out = CVec::Zero(u0.size());
  const ModeSpectrum& sp = prop.spectrum();
  for (const auto& b : br) {
    const cplx coef = prop.coefficients(b.block, u0)(b.column);
    out += coef * std::exp(b.lambda * tau) * sp.right(b);
  }
  return out;
}

}  // namespace

S123 decompose_S123(const ModePropagator& prop, const std::vector<SpectralBranch>& low,
                    const std::vector<SpectralBranch>& high, const CVec& u0, double t, const Regimes& reg) {
  const ModeOperator& op = prop.op();
  const double es = op.eps * op.s;
  const double tau = t / (op.eps * op.eps);
  S123 out;
  out.s1 = CVec::Zero(u0.size());
  out.s2 = CVec::Zero(u0.size());
  if (es <= reg.r0) {
    if (low.size() != 9) throw KinError("ambiguous-match", "low regime needs nine labeled branches");
    out.s1 = branch_sum(prop, low, u0, tau);
  }
  if (es >= reg.r1) {
    if (high.size() != 4) throw KinError("ambiguous-match", "high regime needs four labeled branches");
    out.s2 = branch_sum(prop, high, u0, tau);
  }
  out.s3 = prop.propagate(u0, t) - out.s1 - out.s2;
  return out;
}

CVec q_map(const CollisionMatrices& c, const CVec& u, double s) {
  if (!(s > 0)) throw KinError("config", "Q map needs s > 0");
  const int nv = c.size();
  CVec out = CVec::Zero(nv + kPhysFields);
  out.head(nv) = u.head(nv);
  const cplx n = c.chi.col(0).cast<cplx>().dot(u.head(nv));
  // -ω×X with ω = e1, X = (0, X2, X3): (0, X3, -X2).
  out(nv + 0) = -kI * n / s;
  out(nv + 1) = u(nv + kX3);
  out(nv + 2) = -u(nv + kX2);
  out(nv + 3) = 0;
  out(nv + 4) = u(nv + kY3);
  out(nv + 5) = -u(nv + kY2);
  return out;
}

CVec to_mode_layout(const CollisionMatrices& c, const CVec& phys) {
  const int nv = c.size();
  CVec u(nv + kFieldCount);
  u.head(nv) = phys.head(nv);
  // ω×E = (0, -E3, E2)
  u(nv + kX2) = -phys(nv + 2);
  u(nv + kX3) = phys(nv + 1);
  u(nv + kY2) = -phys(nv + 5);
  u(nv + kY3) = phys(nv + 4);
  return u;
}

double gauss_residual(const CollisionMatrices& c, const CVec& phys, double s) {
  const int nv = c.size();
  const cplx n = c.chi.col(0).cast<cplx>().dot(phys.head(nv));
  return std::abs(kI * s * phys(nv) - n);
}

CVec FluidModeSemigroup::apply_tilde(const CVec& v0, double t) const {
  CVec out = CVec::Zero(v0.size());
  for (int k = 0; k < 3; ++k) out += std::exp(-b[k] * t) * weighted_inner(*coll, v0, lambda[k], s) * lambda[k];
  return out;
}

FluidModeSemigroup make_fluid_semigroup(const CollisionMatrices& c, const MacroMoments& m, double s) {
  FluidModeSemigroup fs;
  fs.s = s;
  fs.coll = &c;
  const int labels[3] = {0, 2, 3};
  for (int k = 0; k < 3; ++k) {
    fs.b[k] = b_of_s(labels[k], s, m);
    fs.lambda[k] = low_freq_eigvec(c, labels[k], s);
  }
  return fs;
}

CVec nsmf_mode_apply(const FluidModeSemigroup& fs, const CVec& v0, double t) {
  if (t < 0) throw KinError("config", "time must be non-negative");
  return q_map(*fs.coll, fs.apply_tilde(v0, t), fs.s);
}

CVec oscillation_part(const CollisionMatrices& c, const MacroMoments& m, const CVec& v0, double t, double s, double eps) {
  CVec out = CVec::Zero(v0.size());
  for (int j : {-1, 1, 4, 5, 6, 7}) {
    const CVec lj = low_freq_eigvec(c, j, s);
    const cplx amp = weighted_inner(c, v0, lj, s);
    out += std::exp(eta_of_s(j, s) * (t / eps) - b_of_s(j, s, m) * t) * amp * lj;
  }
  return out;
}

CVec project_PA(const CollisionMatrices& c, const CVec& u) {
  CVec out = u;
  const int nv = c.size();
  out.head(nv) = c.project_P0(CVec(u.head(nv)));
  return out;
}

CVec project_PB(const CollisionMatrices& c, const CVec& u) {
  CVec out = CVec::Zero(u.size());
  const int nv = c.size();
  out.head(nv) = c.project_P1(CVec(u.head(nv)));
  return out;
}

}  // namespace kinspec
