#pragma once

#include <complex>

namespace boltzmann::detail {

// Plain textbook complex multiply. Keeps the hot loops free of the
// Annex-G NaN fixup branches of operator*.
inline std::complex<double> cmul(const std::complex<double>& a,
                                 const std::complex<double>& b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace boltzmann::detail
