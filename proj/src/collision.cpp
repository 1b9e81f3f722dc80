#include "kinspec/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

namespace kinspec {

const char* diagonal_rule_name(DiagonalRule r) { return r == DiagonalRule::Calibrated ? "calibrated" : "ball"; }

DiagonalRule diagonal_rule_from_name(const std::string& name) {
  if (name == "calibrated") return DiagonalRule::Calibrated;
  if (name == "ball") return DiagonalRule::Ball;
  throw KinError("config", "unknown diagonal rule '" + name + "'");
}

double eval_nu(const Vec3& v) {
  const double r = v.norm();
  const double s2pi = std::sqrt(2 * kPi);
  if (r == 0.0) return 2 * s2pi;
  // ∫_0^r e^{-u²/2} du = √(π/2) erf(r/√2)
  const double g = std::sqrt(kPi / 2) * std::erf(r / std::sqrt(2.0));
  return s2pi * (std::exp(-0.5 * r * r) + (r + 1.0 / r) * g);
}

namespace {

// k expressed through |v|², |w|² and r = |v-w|.
inline double kernel_rsq(double v2, double w2, double r) {
  const double s2pi = std::sqrt(2 * kPi);
  const double d = v2 - w2;
  return 2.0 / (s2pi * r) * std::exp(-d * d / (8 * r * r) - r * r / 8) -
         r / (2 * s2pi) * std::exp(-(v2 + w2) / 4);
}

}  // namespace

double eval_kernel(const Vec3& v, const Vec3& w) {
  const double r = (v - w).norm();
  if (r < 1e-12 * (1 + v.norm() + w.norm()))
    throw KinError("coincident-nodes", "kernel evaluated on its diagonal");
  return kernel_rsq(v.squaredNorm(), w.squaredNorm(), r);
}

double kernel_bump_integral(const Vec3& v, double sigma) {
  using boost::math::quadrature::gauss;
  const double v2 = v.squaredNorm();
  const double vn = std::sqrt(v2);
  const double s2pi = std::sqrt(2 * kPi);
  auto radial = [&](double r) {
    if (r <= 0) return 0.0;
    auto angular = [&](double u) {
      // |w|² = |v|² + 2|v|ru + r²; the singular factor is rewritten with (|v|²-|w|²)/r = -(2|v|u + r).
      const double w2 = v2 + 2 * vn * r * u + r * r;
      const double a = 2 * vn * u + r;
      return 2.0 / s2pi * r * std::exp(-a * a / 8 - r * r / 8) - r * r * r / (2 * s2pi) * std::exp(-(v2 + w2) / 4);
    };
    return 2 * kPi * gauss<double, 48>::integrate(angular, -1.0, 1.0) * std::exp(-r * r / (2 * sigma * sigma));
  };
  return gauss<double, 60>::integrate(radial, 0.0, 9 * sigma);
}

Eigen::Vector3d CollisionMatrices::apply_Pm(const Vec& f) const {
  Eigen::Vector3d out;
  for (int a = 0; a < 3; ++a) out(a) = times_v(a, chi.col(0)).dot(f);
  return out;
}

Vec CollisionMatrices::times_v(int axis, const Vec& f) const {
  Vec out(f.size());
  for (int i = 0; i < f.size(); ++i) out(i) = quad.nodes[i](axis) * f(i);
  return out;
}

Vec CollisionMatrices::solve_Linv_P1(const Vec& g) const {
  const Vec rhs = project_P1(g);
  Vec f = Vec::Zero(size());
  for (size_t s = 0; s < sectors.size(); ++s) {
    Vec r = sectors[s].restrict(rhs);
    if (r.norm() == 0) continue;
    f -= sectors[s].lift(Vec(factors[s].solve(r)));
  }
  // Rounding in P1 sets a floor relative to ‖g‖ when g is almost macroscopic.
  const double floor = 64 * std::numeric_limits<double>::epsilon() * l_norm * g.norm();
  if ((l_mat * f - rhs).norm() > opts.solve_tol * rhs.norm() + floor)
    throw KinError("solver-failure", "L^{-1}P1 residual above solve_tol");
  return f;
}

namespace {

Mat build_chi(const VelocityQuadrature& q) {
  const int n = q.size();
  Mat chi(n, 5);
  for (int i = 0; i < n; ++i) {
    auto a = q.axis_index(i);
    // √W_i √M(v_i) without forming the overflowing factor e^{|v|²/2}.
    const double root = std::sqrt(q.axis_weights[a[0]] * q.axis_weights[a[1]] * q.axis_weights[a[2]]) *
                        std::pow(2 * kPi, -0.75);
    const Vec3& v = q.nodes[i];
    chi(i, 0) = root;
    chi(i, 1) = v(0) * root;
    chi(i, 2) = v(1) * root;
    chi(i, 3) = v(2) * root;
    chi(i, 4) = (v.squaredNorm() - 3) / std::sqrt(6.0) * root;
  }
  // Modified Gram-Schmidt, twice for stability.
  for (int pass = 0; pass < 2; ++pass)
    for (int j = 0; j < 5; ++j) {
      for (int k = 0; k < j; ++k) chi.col(j) -= chi.col(k).dot(chi.col(j)) * chi.col(k);
      chi.col(j).normalize();
    }
  return chi;
}

// Orbit representative under the three reflections; diagonal entries are computed once per orbit.
int orbit_rep(const VelocityQuadrature& q, int idx) {
  auto a = q.axis_index(idx);
  for (int k = 0; k < 3; ++k) a[k] = std::min(a[k], q.n - 1 - a[k]);
  return q.index(a[0], a[1], a[2]);
}

double ball_diagonal(const VelocityQuadrature& q, int i) {
  const double a = std::cbrt(3 * q.weights(i) / (4 * kPi));
  const double c = 0.5 * q.nodes[i].squaredNorm();
  const double ang = c > 0 ? std::sqrt(kPi / c) * std::erf(std::sqrt(c)) : 2.0;
  return a * a * std::sqrt(2 * kPi) * ang;
}

double calibrated_diagonal(const VelocityQuadrature& q, const Mat& kw, int i, double width) {
  const double sigma = width * std::cbrt(q.weights(i));
  const Vec3& v = q.nodes[i];
  double off = 0;
  for (int j = 0; j < q.size(); ++j) {
    if (j == i) continue;
    const double d2 = (q.nodes[j] - v).squaredNorm();
    off += kw(i, j) * std::sqrt(q.weights(j) / q.weights(i)) * std::exp(-d2 / (2 * sigma * sigma));
  }
  return kernel_bump_integral(v, sigma) - off;
}

}  // namespace

CollisionMatrices assemble_collision(const VelocityQuadrature& q, const CollisionOptions& opts) {
  CollisionMatrices c;
  c.quad = q;
  c.opts = opts;
  const int n = q.size();
  c.nu_diag.resize(n);
  for (int i = 0; i < n; ++i) c.nu_diag(i) = eval_nu(q.nodes[i]);

  Vec sw = q.weights.cwiseSqrt();
  Mat& k = c.k_mat;
  k.setZero(n, n);
  auto entry = [&](int i, int j) { return sw(i) * sw(j) * eval_kernel(q.nodes[i], q.nodes[j]); };
  if (q.scheme == Scheme::TensorHermite) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) k(i, j) = k(j, i) = entry(i, j);
  } else {
    // Only rows in the first octant are evaluated; the rest follow from reflection invariance.
    std::vector<int> reps;
    for (int i = 0; i < n; ++i)
      if (orbit_rep(q, i) == i) reps.push_back(i);
    for (int i : reps)
      for (int j = 0; j < n; ++j)
        if (j != i) k(i, j) = entry(i, j);
    for (int i = 0; i < n; ++i) {
      const int r = orbit_rep(q, i);
      if (r == i) continue;
      auto a = q.axis_index(i);
      for (int j = 0; j < n; ++j) {
        int jj = j;
        for (int ax = 0; ax < 3; ++ax)
          if (a[ax] > q.n - 1 - a[ax]) jj = q.mirror(jj, ax);
        k(i, j) = k(r, jj);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int r = orbit_rep(q, i);
    if (r != i) continue;
    const double d = opts.rule == DiagonalRule::Ball ? ball_diagonal(q, i) : calibrated_diagonal(q, k, i, opts.bump_width);
    k(i, i) = d;
  }
  for (int i = 0; i < n; ++i) k(i, i) = k(orbit_rep(q, i), orbit_rep(q, i));

  c.chi = build_chi(q);
  Mat l = k;
  l.diagonal() -= c.nu_diag;
  c.l_mat = 0.5 * (l + l.transpose());

  c.nu0 = 1e300;
  c.nu1 = 0;
  for (int i = 0; i < n; ++i) {
    const double ratio = c.nu_diag(i) / (1 + q.nodes[i].norm());
    c.nu0 = std::min(c.nu0, ratio);
    c.nu1 = std::max(c.nu1, ratio);
  }

  c.sectors = reflection_sectors(q, {0, 1, 2});
  // Spectral norm of the undeflated operator from its sector spectra.
  c.l_norm = 0;
  for (const auto& sb : c.sectors) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sb.restrict_matrix(c.l_mat), Eigen::EigenvaluesOnly);
    c.l_norm = std::max(c.l_norm, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < 5; ++j) c.raw_residual[j] = (c.l_mat * c.chi.col(j)).norm() / c.l_norm;

  // Deflation L <- P1 L P1.
  Mat lx = c.l_mat * c.chi;
  Mat xlx = c.chi.transpose() * lx;
  c.l_mat -= lx * c.chi.transpose() + c.chi * lx.transpose();
  c.l_mat += c.chi * xlx * c.chi.transpose();
  c.l_mat = 0.5 * (c.l_mat + c.l_mat.transpose()).eval();

  finalize_collision(c);
  return c;
}

void finalize_collision(CollisionMatrices& c) {
  const VelocityQuadrature& q = c.quad;
  if (c.sectors.empty()) c.sectors = reflection_sectors(q, {0, 1, 2});
  c.factors.clear();
  c.gap_mu = 1e300;
  for (const auto& sb : c.sectors) {
    Mat ls = sb.restrict_matrix(c.l_mat);
    Mat xs(sb.dim(), 5);
    for (int j = 0; j < 5; ++j) xs.col(j) = sb.restrict(Vec(c.chi.col(j)));
    int nchi = 0;
    for (int j = 0; j < 5; ++j) nchi += xs.col(j).norm() > 0.5;
    Mat a = -ls + xs * xs.transpose();
    c.factors.emplace_back(a);
    if (c.factors.back().info() != Eigen::Success)
      throw KinError("solver-failure", "-L + P0 is not positive definite in a parity sector");
    Eigen::SelfAdjointEigenSolver<Mat> es(-ls, Eigen::EigenvaluesOnly);
    // The nchi smallest eigenvalues belong to the null space after deflation.
    if (nchi < sb.dim()) c.gap_mu = std::min(c.gap_mu, es.eigenvalues()(nchi));
  }
  for (int j = 0; j < 5; ++j) c.residual[j] = (c.l_mat * c.chi.col(j)).norm() / c.l_norm;
  const double worst = *std::max_element(c.residual.begin(), c.residual.end());
  if (worst > c.opts.nullspace_tol)
    throw KinError("nullspace-residual", "post-deflation ‖Lχ‖/‖L‖ = " + std::to_string(worst));
  if (!(c.gap_mu > 0)) throw KinError("nullspace-residual", "no spectral gap on the microscopic subspace");
}

double macro_moment(const CollisionMatrices& c, int i, int j) {
  Vec a = c.times_v(0, c.chi.col(i));
  Vec b = c.times_v(0, c.chi.col(j));
  return c.solve_Linv_P1(a).dot(b);
}

MacroMoments transport_coefficients(const CollisionMatrices& c) {
  MacroMoments m;
  Vec x[5];
  Vec y[5];
  for (int j = 1; j < 5; ++j) {
    x[j] = c.times_v(0, c.chi.col(j));
    y[j] = c.solve_Linv_P1(x[j]);
  }
  m.m11 = y[1].dot(x[1]);
  m.m22 = y[2].dot(x[2]);
  m.m33 = y[3].dot(x[3]);
  m.m44 = y[4].dot(x[4]);
  m.m14 = y[1].dot(x[4]);
  m.m41 = y[4].dot(x[1]);
  m.kappa0 = -m.m22;
  m.kappa1 = -m.m44;
  return m;
}

}  // namespace kinspec
