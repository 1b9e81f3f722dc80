#include "kinspec/linalg.hpp"

#include <mutex>

#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

extern "C" void openblas_set_num_threads(int);

namespace kinspec {

void set_blas_single_thread() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

EigenSystem eig_general(const CMat& a, bool want_left) {
  set_blas_single_thread();
  const lapack_int n = static_cast<lapack_int>(a.rows());
  CMat work = a;
  EigenSystem es;
  es.values.resize(n);
  es.right.resize(n, n);
  if (want_left) es.left.resize(n, n);
  lapack_complex_double* vl = want_left ? reinterpret_cast<lapack_complex_double*>(es.left.data()) : nullptr;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, want_left ? 'V' : 'N', 'V', n,
                                        reinterpret_cast<lapack_complex_double*>(work.data()), n,
                                        reinterpret_cast<lapack_complex_double*>(es.values.data()), vl, n,
                                        reinterpret_cast<lapack_complex_double*>(es.right.data()), n);
  if (info != 0) throw KinError("eigensolver", "zgeev failed with info " + std::to_string(info));
  if (want_left)
    for (lapack_int k = 0; k < n; ++k) {
      const cplx d = es.left.col(k).dot(es.right.col(k));  // conjugates the left vector
      es.left.col(k) /= std::conj(d);
    }
  return es;
}

CMat expm(const CMat& a) { return a.exp(); }

}  // namespace kinspec
