#include "boltzmann/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "boltzmann/errors.hpp"

namespace boltzmann {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBoundaryMassLimit = 1e-6;

// Per-axis velocity weights with the +-pi seam symmetrized: the closed
// trapezoid rule gives the seam node the average of the two endpoint
// values, which is 0 for v and pi^2 for v^2.
std::vector<double> seam_symmetric_v(const VelocityGrid& grid) {
  std::vector<double> v(grid.points_per_axis);
  for (int j = 0; j < grid.points_per_axis; ++j) v[j] = grid.node(j);
  v[0] = 0.0;
  return v;
}

void check_real_compatible(const SpectralField& f) {
  const double scale = std::max(1.0, coeff_linf(f));
  if (conjugate_symmetry_defect(f) > 1e-8 * scale)
    throw ArgumentError("moments: field is not real-compatible");
}

struct RawMoments {
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;  // integral of |v|^2 f
};

RawMoments raw_moments(const SpectralField& f, const VelocityGrid& grid) {
  const auto values = evaluate(f, grid);
  const auto v = seam_symmetric_v(grid);
  const int n = grid.points_per_axis;
  const double w = std::pow(grid.spacing(), f.dim);

  RawMoments out;
  int j[3] = {0, 0, 0};
  const std::size_t total = values.size();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int a = f.dim - 1; a >= 0; --a) {
      j[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    const double fv = values[lin];
    out.mass += fv;
    double v2 = 0.0;
    for (int a = 0; a < f.dim; ++a) {
      const double va = v[j[a]];
      out.momentum[a] += va * fv;
      v2 += (j[a] == 0 ? kPi * kPi : va * va);
    }
    out.energy += v2 * fv;
  }
  out.mass *= w;
  out.energy *= w;
  for (int a = 0; a < f.dim; ++a) out.momentum[a] *= w;
  return out;
}

}  // namespace

Moments moments(const SpectralField& f, const VelocityGrid& grid) {
  check_real_compatible(f);
  const RawMoments raw = raw_moments(f, grid);

  Moments m;
  m.rho = raw.mass;
  if (!(m.rho > 0.0))
    throw NonPhysicalStateError("moments: non-positive density");
  double u2 = 0.0;
  for (int a = 0; a < f.dim; ++a) {
    m.u[a] = raw.momentum[a] / m.rho;
    u2 += m.u[a] * m.u[a];
  }
  m.temperature = (raw.energy / m.rho - u2) / f.dim;
  if (!(m.temperature > 0.0))
    throw NonPhysicalStateError("moments: non-positive temperature");
  return m;
}

SpectralField maxwellian(const Moments& m, const VelocityGrid& grid, int order) {
  if (!(m.rho > 0.0))
    throw NonPhysicalStateError("maxwellian: non-positive density");
  if (!(m.temperature > 0.0))
    throw NonPhysicalStateError("maxwellian: non-positive temperature");

  double u_inf = 0.0;
  for (int a = 0; a < grid.dim; ++a) u_inf = std::max(u_inf, std::abs(m.u[a]));
  const double boundary_mass =
      u_inf >= kPi ? 1.0
                   : std::exp(-(kPi - u_inf) * (kPi - u_inf) / (2.0 * m.temperature));
  if (boundary_mass > kBoundaryMassLimit)
    throw SupportViolationError(
        "maxwellian: state not representable on the periodic box "
        "(boundary mass " + std::to_string(boundary_mass) + ")",
        boundary_mass);

  const int n = grid.points_per_axis;
  const double prefactor =
      m.rho / std::pow(2.0 * kPi * m.temperature, grid.dim / 2.0);

  std::vector<double> samples(grid.total_points());
  int j[3] = {0, 0, 0};
  for (std::size_t lin = 0; lin < samples.size(); ++lin) {
    std::size_t rem = lin;
    for (int a = grid.dim - 1; a >= 0; --a) {
      j[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    double d2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double dv = m.u[a] - grid.node(j[a]);
      d2 += dv * dv;
    }
    samples[lin] = prefactor * std::exp(-d2 / (2.0 * m.temperature));
  }
  return project(samples, grid, order);
}

MicroMacroState split(const SpectralField& f, const VelocityGrid& grid) {
  MicroMacroState state;
  state.macro = maxwellian(moments(f, grid), grid, f.order);
  state.micro = f - state.macro;
  return state;
}

std::array<double, 3> micro_moment_residuals(const MicroMacroState& state,
                                             const VelocityGrid& grid) {
  const RawMoments raw = raw_moments(state.micro, grid);
  double mom = 0.0;
  for (int a = 0; a < state.micro.dim; ++a) mom += raw.momentum[a] * raw.momentum[a];
  return {raw.mass, std::sqrt(mom), raw.energy};
}

double grid_entropy(const SpectralField& f, const VelocityGrid& grid) {
  const auto values = evaluate(f, grid);
  const double w = std::pow(grid.spacing(), f.dim);
  double s = 0.0;
  for (double v : values) s += v * std::log(std::max(v, 1e-30));
  return w * s;
}

double min_grid_value(const SpectralField& f, const VelocityGrid& grid) {
  const auto values = evaluate(f, grid);
  return *std::min_element(values.begin(), values.end());
}

}  // namespace boltzmann
