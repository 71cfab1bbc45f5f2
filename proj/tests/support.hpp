#ifndef HEATRECT_TESTS_SUPPORT_HPP
#define HEATRECT_TESTS_SUPPORT_HPP

#include <random>

#include "heatrect/tensor.hpp"

namespace heatrect::testing {

inline std::mt19937& rng() {
  static std::mt19937 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline DenseMatrix random_matrix(long d) {
  DenseMatrix m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m(i, j) = cplx(uniform(-1, 1), uniform(-1, 1));
  return m;
}

inline DenseMatrix random_hermitian(long d) {
  const DenseMatrix m = random_matrix(d);
  return 0.5 * (m + m.adjoint());
}

/// Random full-rank density matrix G G^dag / tr.
inline DensityMatrix random_state(const SpaceLayout& layout) {
  const DenseMatrix g = random_matrix(layout.dim());
  DenseMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(layout, rho);
}

/// Kronecker product written out index by index.
inline DenseMatrix kron_loops(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      for (long k = 0; k < b.rows(); ++k)
        for (long l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline double max_abs(const DenseMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace heatrect::testing

#endif  // HEATRECT_TESTS_SUPPORT_HPP
