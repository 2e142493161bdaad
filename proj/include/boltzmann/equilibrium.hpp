#pragma once

#include <array>

#include "boltzmann/field.hpp"

namespace boltzmann {

/// Density, mean velocity and temperature in scaled units.
struct Moments {
  double rho = 0.0;
  std::array<double, 3> u{0.0, 0.0, 0.0};
  double temperature = 0.0;
};

/// Micro-macro pair: the full field is macro + micro by construction.
struct MicroMacroState {
  SpectralField macro;  // projected Maxwellian, fixed in time
  SpectralField micro;  // fluctuation
};

/// Grid-quadrature moments. The trapezoid rule is applied on the closed
/// box, so the odd velocity weight cancels at the +-pi seam; for fields in
/// P^N with enough grid points the density equals (2*pi)^d * f_0 exactly.
Moments moments(const SpectralField& f, const VelocityGrid& grid);

/// Samples M(rho,u,T)(v) = rho/(2*pi*T)^{d/2} exp(-|u-v|^2/(2T)) on the
/// grid and projects to the requested order. Fails when the Gaussian is
/// not numerically negligible at the box boundary.
SpectralField maxwellian(const Moments& m, const VelocityGrid& grid, int order);

/// macro = maxwellian(moments(f)), micro = f - macro.
MicroMacroState split(const SpectralField& f, const VelocityGrid& grid);

/// Raw grid moments of the micro part: {mass, |momentum|, energy}.
/// Small but nonzero (projection-error sized); reported, not enforced.
std::array<double, 3> micro_moment_residuals(const MicroMacroState& state,
                                             const VelocityGrid& grid);

/// Grid quadrature of f*log(f) with values clipped below at 1e-30
/// (spectral solutions can be locally negative). Informational only.
double grid_entropy(const SpectralField& f, const VelocityGrid& grid);

double min_grid_value(const SpectralField& f, const VelocityGrid& grid);

}  // namespace boltzmann
