#pragma once

#include "boltzmann/field.hpp"
#include "boltzmann/kernel.hpp"

namespace boltzmann {

/// Projected collision operator in quadratic form:
///   Q_k = sum_{l+m=k, |l_j|,|m_j|,|k_j| <= N} f_l g_m beta(l,m).
/// Bilinear in (f,g); with f == g this is the spectral collision operator.
SpectralField q_quadratic(const SpectralField& f, const SpectralField& g,
                          const KernelTable& table);

/// Linearized operator around a fixed Maxwellian field:
/// q_quadratic(g, M) + q_quadratic(M, g).
SpectralField linearized(const SpectralField& maxwellian_field,
                         const SpectralField& g, const KernelTable& table);

/// Equilibrium-preserving right-hand side evaluated through the single
/// bilinear form q_quadratic(f + M, f - M), which makes f == M a bit-exact
/// fixed point (one argument is the zero field).
SpectralField ep_rhs(const SpectralField& f, const SpectralField& maxwellian_field,
                     const KernelTable& table);

/// H^r distance between the order-N equilibrium-preserving right-hand side
/// and its reference-order counterpart:
///   || pad(ep_rhs(f,M,table_n)) - Q_ref(pad f, pad f) + Q_ref(pad M, pad M) ||_{H^r}.
/// Requires table_ref.order >= 2 * table_n.order.
double perturbation_norm(const SpectralField& f,
                         const SpectralField& maxwellian_field,
                         const KernelTable& table_n, const KernelTable& table_ref,
                         double sobolev_r);

}  // namespace boltzmann
