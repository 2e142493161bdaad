#include "boltzmann/bkw.hpp"

#include <cmath>
#include <numbers>

#include "boltzmann/collision.hpp"
#include "boltzmann/errors.hpp"

namespace boltzmann::bkw {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const VelocityGrid& grid, double t, double temperature,
                           bool derivative) {
  if (grid.dim != 2) throw ArgumentError("bkw: only defined for dim == 2");
  std::vector<double> samples(grid.total_points());
  const int n = grid.points_per_axis;
  double v[2];
  for (std::size_t lin = 0; lin < samples.size(); ++lin) {
    v[0] = grid.node(static_cast<int>(lin) / n);
    v[1] = grid.node(static_cast<int>(lin) % n);
    samples[lin] = derivative ? time_derivative(v, t, temperature)
                              : value(v, t, temperature);
  }
  return samples;
}

}  // namespace

double width(double t) { return 1.0 - std::exp(-t / 8.0) / 2.0; }

double value(const double* v, double t, double temperature) {
  const double k = width(t);
  const double s = k * temperature;  // Gaussian variance per axis
  const double v2 = v[0] * v[0] + v[1] * v[1];
  const double gauss = std::exp(-v2 / (2.0 * s)) / (2.0 * kPi * s);
  const double poly = (2.0 - 1.0 / k) + (1.0 - k) / (2.0 * k * s) * v2;
  return gauss * poly;
}

double time_derivative(const double* v, double t, double temperature) {
  const double k = width(t);
  const double dk_dt = std::exp(-t / 8.0) / 16.0;
  const double s = k * temperature;
  const double v2 = v[0] * v[0] + v[1] * v[1];
  const double x = v2 / (2.0 * s);
  const double gauss = std::exp(-x) / (2.0 * kPi * s);

  const double a = 2.0 - 1.0 / k;
  const double b = (1.0 - k) / (2.0 * k * k * temperature);
  const double da = 1.0 / (k * k);
  const double db = -(2.0 - k) / (2.0 * k * k * k * temperature);

  // d/dK of gauss is gauss*(x-1)/K; product rule with the polynomial factor
  const double df_dk =
      gauss * ((x - 1.0) / k * (a + b * v2) + (da + db * v2));
  return dk_dt * df_dk;
}

SpectralField field(const VelocityGrid& grid, int order, double t,
                    double temperature) {
  return project(sample(grid, t, temperature, false), grid, order);
}

SpectralField time_derivative_field(const VelocityGrid& grid, int order, double t,
                                    double temperature) {
  return project(sample(grid, t, temperature, true), grid, order);
}

double residual(const KernelTable& table, const VelocityGrid& grid, double t,
                double temperature) {
  const int order = table.config.order;
  const SpectralField f = field(grid, order, t, temperature);
  const SpectralField dfdt = time_derivative_field(grid, order, t, temperature);
  return norm(dfdt - q_quadratic(f, f, table), NormKind::L2);
}

}  // namespace boltzmann::bkw
