#pragma once

#include <array>
#include <vector>

#include "kinspec/types.hpp"

namespace kinspec {

enum class Scheme { TensorHermite, SymmetryReduced };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/// Absolute errors of the Maxwellian moments integrated by the quadrature.
struct MomentReport {
  double mass = 0;    // |∫M - 1|
  double second = 0;  // max_ij |∫v_i v_j M - δ_ij|
  double fourth = 0;  // |∫|v|^4 M - 15|
  double max() const;
};

/// Tensor Gauss-Hermite velocity grid. Weights integrate against dv, so
/// ∫g dv ≈ Σ weights[i] g(nodes[i]).
struct VelocityQuadrature {
  int n = 0;
  Scheme scheme = Scheme::TensorHermite;
  std::vector<double> axis_nodes;
  std::vector<double> axis_weights;  // against e^{-x²/2} dx
  std::vector<Vec3> nodes;
  Vec weights;
  MomentReport moments;

  int size() const { return static_cast<int>(nodes.size()); }
  int index(int i1, int i2, int i3) const { return (i1 * n + i2) * n + i3; }
  std::array<int, 3> axis_index(int idx) const { return {idx / (n * n), (idx / n) % n, idx % n}; }
  /// Index of the node reflected across the plane v_axis = 0.
  int mirror(int idx, int axis) const;
  /// Maps a function sampled on the nodes to the symmetric representation u_i = √W_i f(v_i).
  Vec to_sym(const Vec& f) const;
};

/// Probabilists' Gauss-Hermite rule (weight e^{-x²/2}), nodes ascending and exactly antisymmetric.
void hermite_rule(int n, std::vector<double>& x, std::vector<double>& w);

VelocityQuadrature build_quadrature(int per_axis_count, Scheme scheme = Scheme::TensorHermite,
                                    double moment_tol = 1e-10);

double maxwellian(const Vec3& v);

}  // namespace kinspec
