#pragma once

#include "boltzmann/field.hpp"
#include "boltzmann/kernel.hpp"

namespace boltzmann::bkw {

// Exact self-similar transient of the 2-D homogeneous equation for Maxwell
// molecules with the normalized isotropic angular kernel. External
// verification oracle; the residual() check below validates it against the
// discrete operator before any experiment relies on it.

/// Default scaled terminal temperature. Chosen so that the relative-velocity
/// support condition of the truncated operator and the order-32 resolution
/// both hold with margin on [-pi,pi)^2, while keeping the truncation defect
/// of the classical scheme large enough to observe in long-time contrasts.
inline constexpr double kDefaultTemperature = 0.25;

/// Width parameter K(t) = 1 - exp(-t/8)/2.
double width(double t);

/// Pointwise value at scaled velocity v (length 2).
double value(const double* v, double t, double temperature = kDefaultTemperature);

/// Pointwise time derivative of the exact solution.
double time_derivative(const double* v, double t,
                       double temperature = kDefaultTemperature);

/// Projection of the state at time t.
SpectralField field(const VelocityGrid& grid, int order, double t,
                    double temperature = kDefaultTemperature);

SpectralField time_derivative_field(const VelocityGrid& grid, int order, double t,
                                    double temperature = kDefaultTemperature);

/// L2 norm of P_N df/dt - Q_N(P_N f, P_N f) at time t.
double residual(const KernelTable& table, const VelocityGrid& grid, double t,
                double temperature = kDefaultTemperature);

}  // namespace boltzmann::bkw
