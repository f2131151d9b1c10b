#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "patchdyn/model.hpp"

namespace patchdyn {

using Eigenpair = std::array<std::complex<double>, 2>;

/// Eigenvalues of a 2x2 matrix from trace and determinant. Real pairs are
/// returned ascending; the larger-magnitude root is formed first and the
/// other recovered from the determinant.
inline Eigenpair eigenvalues(const Matrix2& j) {
  const double tr = j.trace();
  const double det = j.det();
  const double disc = tr * tr - 4 * det;
  if (disc < 0) {
    const double re = tr / 2;
    const double im = std::sqrt(-disc) / 2;
    return {std::complex<double>(re, -im), std::complex<double>(re, im)};
  }
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (tr >= 0 ? -tr - sq : -tr + sq);
  double a = q;
  double b = q != 0 ? det / q : 0.0;
  if (a > b) std::swap(a, b);
  return {std::complex<double>(a, 0), std::complex<double>(b, 0)};
}

inline bool is_complex_pair(const Eigenpair& ev) { return ev[0].imag() != 0.0; }

}  // namespace patchdyn
