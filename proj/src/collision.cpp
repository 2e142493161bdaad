#include "boltzmann/collision.hpp"

#include <algorithm>
#include <cmath>

#include "boltzmann/detail/complex_ops.hpp"
#include "boltzmann/errors.hpp"

namespace boltzmann {

namespace {

using detail::cmul;

void check_compatible(const SpectralField& f, const SpectralField& g,
                      const KernelTable& table) {
  if (f.dim != g.dim || f.order != g.order)
    throw ArgumentError("collision: field shape mismatch");
  if (f.dim != table.config.dim || f.order != table.config.order)
    throw ArgumentError("collision: field does not match kernel table");
}

void accumulate_2d(const SpectralField& f, const SpectralField& g,
                   const KernelTable& table, SpectralField& out) {
  const int N = f.order;
  const int side = f.side();
  const std::size_t field = f.size();
  const Complex* fc = f.coeffs.data();
  const Complex* gc = g.coeffs.data();
  const Complex* beta = table.modes.data();
  Complex* oc = out.coeffs.data();

#pragma omp parallel for schedule(static)
  for (long long klin = 0; klin < static_cast<long long>(field); ++klin) {
    const int k1 = static_cast<int>(klin / side) - N;
    const int k2 = static_cast<int>(klin % side) - N;
    Complex acc(0.0, 0.0);
    const int l1_lo = std::max(-N, k1 - N), l1_hi = std::min(N, k1 + N);
    const int l2_lo = std::max(-N, k2 - N), l2_hi = std::min(N, k2 + N);
    for (int l1 = l1_lo; l1 <= l1_hi; ++l1) {
      const int m1 = k1 - l1;
      std::size_t lin_l = static_cast<std::size_t>(l1 + N) * side + (l2_lo + N);
      std::size_t lin_m = static_cast<std::size_t>(m1 + N) * side + (k2 - l2_lo + N);
      for (int l2 = l2_lo; l2 <= l2_hi; ++l2, ++lin_l, --lin_m) {
        acc += cmul(cmul(fc[lin_l], gc[lin_m]), beta[lin_l * field + lin_m]);
      }
    }
    oc[klin] = acc;
  }
}

void accumulate_3d(const SpectralField& f, const SpectralField& g,
                   const KernelTable& table, SpectralField& out) {
  const int N = f.order;
  const int side = f.side();
  const std::size_t field = f.size();
  const Complex* fc = f.coeffs.data();
  const Complex* gc = g.coeffs.data();
  const Complex* beta = table.modes.data();
  Complex* oc = out.coeffs.data();

#pragma omp parallel for schedule(static)
  for (long long klin = 0; klin < static_cast<long long>(field); ++klin) {
    int k[3];
    std::size_t rem = static_cast<std::size_t>(klin);
    for (int a = 2; a >= 0; --a) {
      k[a] = static_cast<int>(rem % side) - N;
      rem /= side;
    }
    Complex acc(0.0, 0.0);
    const int lo[3] = {std::max(-N, k[0] - N), std::max(-N, k[1] - N),
                       std::max(-N, k[2] - N)};
    const int hi[3] = {std::min(N, k[0] + N), std::min(N, k[1] + N),
                       std::min(N, k[2] + N)};
    for (int l0 = lo[0]; l0 <= hi[0]; ++l0) {
      const int m0 = k[0] - l0;
      for (int l1 = lo[1]; l1 <= hi[1]; ++l1) {
        const int m1 = k[1] - l1;
        std::size_t lin_l =
            (static_cast<std::size_t>(l0 + N) * side + (l1 + N)) * side +
            (lo[2] + N);
        std::size_t lin_m =
            (static_cast<std::size_t>(m0 + N) * side + (m1 + N)) * side +
            (k[2] - lo[2] + N);
        for (int l2 = lo[2]; l2 <= hi[2]; ++l2, ++lin_l, --lin_m) {
          acc += cmul(cmul(fc[lin_l], gc[lin_m]), beta[lin_l * field + lin_m]);
        }
      }
    }
    oc[klin] = acc;
  }
}

}  // namespace

SpectralField q_quadratic(const SpectralField& f, const SpectralField& g,
                          const KernelTable& table) {
  check_compatible(f, g, table);
  SpectralField out(f.dim, f.order);
  if (f.dim == 2)
    accumulate_2d(f, g, table, out);
  else
    accumulate_3d(f, g, table, out);
  if (!all_finite(out))
    throw OverflowError("collision output is non-finite (blow-up)");
  return out;
}

SpectralField linearized(const SpectralField& maxwellian_field,
                         const SpectralField& g, const KernelTable& table) {
  return q_quadratic(g, maxwellian_field, table) +
         q_quadratic(maxwellian_field, g, table);
}

SpectralField ep_rhs(const SpectralField& f, const SpectralField& maxwellian_field,
                     const KernelTable& table) {
  return q_quadratic(f + maxwellian_field, f - maxwellian_field, table);
}

double perturbation_norm(const SpectralField& f,
                         const SpectralField& maxwellian_field,
                         const KernelTable& table_n, const KernelTable& table_ref,
                         double sobolev_r) {
  if (table_ref.config.dim != table_n.config.dim)
    throw ArgumentError("perturbation_norm: table dimension mismatch");
  if (table_ref.config.order < 2 * table_n.config.order)
    throw ArgumentError("perturbation_norm: reference order must be >= 2N");
  const int n_ref = table_ref.config.order;

  SpectralField diff = pad(ep_rhs(f, maxwellian_field, table_n), n_ref);
  const SpectralField f_ref = pad(f, n_ref);
  const SpectralField m_ref = pad(maxwellian_field, n_ref);
  diff -= q_quadratic(f_ref, f_ref, table_ref);
  diff += q_quadratic(m_ref, m_ref, table_ref);
  return norm(diff, NormKind::Hr, sobolev_r);
}

}  // namespace boltzmann
