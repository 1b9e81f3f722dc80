#pragma once

#include "kinspec/types.hpp"

namespace kinspec {

/// Dense non-Hermitian eigensystem A V = V diag(values), W^H A = diag(values) W^H.
struct EigenSystem {
  CVec values;
  CMat right;  // columns normalized to unit Euclidean norm
  CMat left;   // scaled so that left.col(k)^H right.col(k) = 1
};

/// LAPACK zgeev with both eigenvector sets; single-threaded BLAS.
EigenSystem eig_general(const CMat& a, bool want_left = true);

/// Pins OpenBLAS to one thread so results are reproducible.
void set_blas_single_thread();

/// exp(a) by scaling and squaring (Padé).
CMat expm(const CMat& a);

}  // namespace kinspec
