#include "kinspec/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace kinspec {

const char* scheme_name(Scheme s) {
  return s == Scheme::TensorHermite ? "tensor-hermite" : "symmetry-reduced";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "tensor-hermite") return Scheme::TensorHermite;
  if (name == "symmetry-reduced") return Scheme::SymmetryReduced;
  throw KinError("config", "unknown quadrature scheme '" + name + "'");
}

double MomentReport::max() const { return std::max({mass, second, fourth}); }

double maxwellian(const Vec3& v) { return std::pow(2 * kPi, -1.5) * std::exp(-0.5 * v.squaredNorm()); }

void hermite_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  // Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite recurrence.
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    w[k] = std::sqrt(2 * kPi) * v0 * v0;
  }
  for (int k = 0; k < n / 2; ++k) {
    int m = n - 1 - k;
    double xs = 0.5 * (x[m] - x[k]);
    double ws = 0.5 * (w[m] + w[k]);
    x[k] = -xs;
    x[m] = xs;
    w[k] = w[m] = ws;
  }
  if (n % 2) x[n / 2] = 0.0;
}

int VelocityQuadrature::mirror(int idx, int axis) const {
  auto a = axis_index(idx);
  a[axis] = n - 1 - a[axis];
  return index(a[0], a[1], a[2]);
}

Vec VelocityQuadrature::to_sym(const Vec& f) const { return f.cwiseProduct(weights.cwiseSqrt()); }

VelocityQuadrature build_quadrature(int per_axis_count, Scheme scheme, double moment_tol) {
  if (per_axis_count < 6) throw KinError("config", "per_axis_count must be >= 6");
  VelocityQuadrature q;
  q.n = per_axis_count;
  q.scheme = scheme;
  hermite_rule(q.n, q.axis_nodes, q.axis_weights);
  const int n = q.n;
  q.nodes.resize(n * n * n);
  q.weights.resize(n * n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        int i = q.index(a, b, c);
        Vec3 v(q.axis_nodes[a], q.axis_nodes[b], q.axis_nodes[c]);
        q.nodes[i] = v;
        // Weight against dv: GH weights times the inverse Gaussian factor.
        q.weights(i) = q.axis_weights[a] * q.axis_weights[b] * q.axis_weights[c] * std::exp(0.5 * v.squaredNorm());
      }

  // Moment test, accumulated in node order for determinism.
  double m0 = 0, v4 = 0;
  Eigen::Matrix3d m2 = Eigen::Matrix3d::Zero();
  for (int i = 0; i < q.size(); ++i) {
    // W_i M(v_i) is the product of GH weights over (2π)^{3/2}; use it directly to avoid overflow.
    int a = i / (n * n), b = (i / n) % n, c = i % n;
    double wm = q.axis_weights[a] * q.axis_weights[b] * q.axis_weights[c] * std::pow(2 * kPi, -1.5);
    const Vec3& v = q.nodes[i];
    m0 += wm;
    m2 += wm * v * v.transpose();
    v4 += wm * std::pow(v.squaredNorm(), 2);
  }
  q.moments.mass = std::abs(m0 - 1);
  q.moments.second = (m2 - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  q.moments.fourth = std::abs(v4 - 15);
  if (q.moments.max() > moment_tol * 15)
    throw KinError("moment-test", "Maxwellian moments deviate by " + std::to_string(q.moments.max()));
  return q;
}

}  // namespace kinspec
