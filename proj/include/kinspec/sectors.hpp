#pragma once

#include <utility>
#include <vector>

#include "kinspec/quadrature.hpp"

namespace kinspec {

/// Orthonormal basis of the velocity functions with fixed parity under a set of
/// coordinate reflections v_a -> -v_a. Columns are sparse (at most 2^k entries).
struct SectorBasis {
  std::vector<int> axes;
  std::vector<int> parity;  // 0 even, 1 odd, per entry of axes
  int n_full = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;

  int dim() const { return static_cast<int>(cols.size()); }
  int parity_of(int axis) const;

  template <class V>
  V restrict(const V& full) const {
    V out(dim());
    for (int c = 0; c < dim(); ++c) {
      typename V::Scalar acc(0);
      for (auto [i, w] : cols[c]) acc += w * full(i);
      out(c) = acc;
    }
    return out;
  }
  template <class V>
  V lift(const V& red) const {
    V out = V::Zero(n_full);
    for (int c = 0; c < dim(); ++c)
      for (auto [i, w] : cols[c]) out(i) += w * red(c);
    return out;
  }
  /// Qᵀ M Q for a dense real n_full x n_full matrix.
  Mat restrict_matrix(const Mat& m) const;
  /// Qᵀ diag(d) Q (diagonal whenever d is invariant under the reflections).
  Mat restrict_diag(const Vec& d) const;
};

/// One basis per parity pattern; ordering is binary in the parity bits with the first axis most significant.
std::vector<SectorBasis> reflection_sectors(const VelocityQuadrature& q, const std::vector<int>& axes);

}  // namespace kinspec
