#include <gsl/gsl_integration.h>

#include <cmath>
#include <numbers>
#include <random>

#include "boltzmann/bkw.hpp"
#include "boltzmann/errors.hpp"
#include "boltzmann/field.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace boltzmann;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle for the defining projection integral: per-axis
// Gauss-Legendre quadrature of (1/2pi) int g(v) exp(-i k v) dv for the
// separable Gaussian factor.
Complex gauss_coeff_1d(double temperature, int k, int nodes = 200) {
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(nodes);
  double re = 0.0, im = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-kPi, kPi, static_cast<std::size_t>(i), &x, &w, t);
    const double g =
        std::exp(-x * x / (2.0 * temperature)) / std::sqrt(2.0 * kPi * temperature);
    re += w * g * std::cos(k * x);
    im -= w * g * std::sin(k * x);
  }
  gsl_integration_glfixed_table_free(t);
  return Complex(re, im) / (2.0 * kPi);
}

}  // namespace

TEST_CASE("grid sizing picks the smallest power of two >= 2N+2") {
  CHECK(VelocityGrid::for_order(2, 4).points_per_axis == 16);
  CHECK(VelocityGrid::for_order(2, 8).points_per_axis == 32);
  CHECK(VelocityGrid::for_order(2, 16).points_per_axis == 64);
  CHECK(VelocityGrid::for_order(2, 32).points_per_axis == 128);
  CHECK(VelocityGrid::for_order(2, 8).spacing() == doctest::Approx(2.0 * kPi / 32));
}

TEST_CASE("project recovers single trigonometric modes") {
  const auto grid = VelocityGrid::for_order(2, 8);
  std::vector<double> samples(grid.total_points());
  const int n = grid.points_per_axis;
  for (int j0 = 0; j0 < n; ++j0)
    for (int j1 = 0; j1 < n; ++j1)
      samples[static_cast<std::size_t>(j0) * n + j1] = std::cos(grid.node(j0));

  const SpectralField f = project(samples, grid, 8);
  for (std::size_t lin = 0; lin < f.size(); ++lin) {
    int k[2];
    k[0] = static_cast<int>(lin / f.side()) - f.order;
    k[1] = static_cast<int>(lin % f.side()) - f.order;
    const Complex expected =
        (std::abs(k[0]) == 1 && k[1] == 0) ? Complex(0.5, 0.0) : Complex(0.0, 0.0);
    CHECK(std::abs(f.coeffs[lin] - expected) < 1e-14);
  }
}

TEST_CASE("project of a constant puts everything in mode zero") {
  const auto grid = VelocityGrid::for_order(3, 2);
  std::vector<double> samples(grid.total_points(), 1.0);
  const SpectralField f = project(samples, grid, 2);
  CHECK(std::abs(f.at({0, 0, 0}) - Complex(1.0, 0.0)) < 1e-14);
  double off = 0.0;
  for (std::size_t lin = 0; lin < f.size(); ++lin)
    if (lin != f.linear_index(std::vector<int>{0, 0, 0}.data()))
      off = std::max(off, std::abs(f.coeffs[lin]));
  CHECK(off < 1e-14);
}

TEST_CASE("projected Maxwellian matches the quadrature oracle to 1e-10") {
  const int order = 16;
  const auto grid = VelocityGrid(2, 64);
  const double temperature = 0.2;
  const auto samples =
      testutil::maxwellian_samples(grid, 1.0, {0.0, 0.0, 0.0}, temperature);
  const SpectralField f = project(samples, grid, order);

  // The Gaussian factorizes, so the defining integral splits into per-axis
  // factors, each evaluated by Gauss-Legendre quadrature.
  double worst = 0.0;
  for (int k0 = -order; k0 <= order; ++k0) {
    const Complex c0 = gauss_coeff_1d(temperature, k0);
    for (int k1 = -order; k1 <= order; ++k1) {
      const Complex expected = c0 * gauss_coeff_1d(temperature, k1);
      worst = std::max(worst, std::abs(f.at({k0, k1}) - expected));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("evaluate of the zero-mode field is constant") {
  SpectralField f(2, 4);
  f.at({0, 0}) = Complex(3.25, 0.0);
  const auto grid = VelocityGrid::for_order(2, 4);
  const auto values = evaluate(f, grid);
  for (double v : values) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("project(evaluate(f)) is the identity on P^N") {
  std::mt19937_64 rng(12345);
  for (int dim : {2, 3}) {
    const int order = dim == 2 ? 9 : 3;
    const SpectralField f = testutil::random_real_field(dim, order, rng, 0.1);
    const auto grid = VelocityGrid::for_order(dim, order);
    const SpectralField back = project(evaluate(f, grid), grid, order);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      worst = std::max(worst, std::abs(f.coeffs[i] - back.coeffs[i]));
    CHECK(worst < 1e-13);
    CHECK(conjugate_symmetry_defect(back) < 1e-13);
  }
}

TEST_CASE("interpolation error of the smooth transient decays spectrally") {
  std::vector<double> errors;
  for (int order : {8, 16, 32}) {
    const auto grid = VelocityGrid::for_order(2, order);
    const int n = grid.points_per_axis;
    std::vector<double> samples(grid.total_points());
    double v[2];
    for (int j0 = 0; j0 < n; ++j0)
      for (int j1 = 0; j1 < n; ++j1) {
        v[0] = grid.node(j0);
        v[1] = grid.node(j1);
        samples[static_cast<std::size_t>(j0) * n + j1] = bkw::value(v, 0.0);
      }
    const SpectralField f = project(samples, grid, order);
    const auto values = evaluate(f, grid);
    double err = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      err = std::max(err, std::abs(values[i] - samples[i]));
    errors.push_back(err);
  }
  // interpolation on the projection grid is exact in exact arithmetic only
  // for band-limited data; the tail of the transient shows up here
  CHECK(errors[0] > errors[1]);
  CHECK(errors[1] > errors[2]);
}

TEST_CASE("pad embeds without changing values or norms") {
  std::mt19937_64 rng(99);
  const SpectralField f = testutil::random_real_field(2, 6, rng, 0.05);
  const SpectralField padded = pad(f, 13);

  const SpectralField back = truncate(padded, 6);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(back.coeffs[i] == f.coeffs[i]);

  CHECK(norm(padded, NormKind::L2) == norm(f, NormKind::L2));
  CHECK(norm(padded, NormKind::Hr, 1.5) == norm(f, NormKind::Hr, 1.5));

  const auto grid = VelocityGrid::for_order(2, 13);
  const auto v1 = evaluate(f, grid);
  const auto v2 = evaluate(padded, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i)
    worst = std::max(worst, std::abs(v1[i] - v2[i]));
  CHECK(worst < 1e-14);

  CHECK_THROWS_AS(pad(f, 6), ArgumentError);
  CHECK_THROWS_AS(pad(f, 3), ArgumentError);
}

TEST_CASE("norms of simple fields") {
  SpectralField zero(2, 5);
  CHECK(norm(zero, NormKind::L2) == 0.0);
  CHECK(norm(zero, NormKind::Hr, 2.0) == 0.0);
  CHECK(norm(zero, NormKind::L1Grid) == 0.0);
  CHECK(norm(zero, NormKind::LinfGrid) == 0.0);

  SpectralField mode(2, 5);
  mode.at({3, -2}) = Complex(1.0, 0.0);
  CHECK(norm(mode, NormKind::L2) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
  CHECK(norm(mode, NormKind::Hr, 1.0) ==
        doctest::Approx(2.0 * kPi * std::sqrt(1.0 + 13.0)).epsilon(1e-14));
  CHECK(norm(mode, NormKind::Hr, 0.0) ==
        doctest::Approx(norm(mode, NormKind::L2)).epsilon(1e-15));
}

TEST_CASE("grid L1 norm of a projected Maxwellian recovers the box mass") {
  const double temperature = 0.5;
  const auto grid = VelocityGrid::for_order(2, 16);
  const auto samples =
      testutil::maxwellian_samples(grid, 1.0, {0.0, 0.0, 0.0}, temperature);
  const SpectralField f = project(samples, grid, 16);
  const double box_mass = std::pow(std::erf(kPi / std::sqrt(2.0 * temperature)), 2);
  CHECK(norm(f, grid, NormKind::L1Grid) ==
        doctest::Approx(box_mass).epsilon(1e-6));
}

TEST_CASE("Parseval: coefficient L2 equals grid quadrature of |f|^2") {
  std::mt19937_64 rng(2024);
  for (int dim : {2, 3}) {
    const int order = dim == 2 ? 7 : 3;
    const SpectralField f = testutil::random_real_field(dim, order, rng, 0.2);
    const auto grid = VelocityGrid::for_order(dim, order);
    const auto values = evaluate(f, grid);
    double quad = 0.0;
    for (double v : values) quad += v * v;
    quad *= std::pow(grid.spacing(), dim);
    const double l2 = norm(f, NormKind::L2);
    CHECK(l2 * l2 == doctest::Approx(quad).epsilon(1e-12));
  }
}

TEST_CASE("project validates the sampling condition") {
  const VelocityGrid grid(2, 16);
  std::vector<double> samples(grid.total_points(), 1.0);
  CHECK_THROWS_AS(project(samples, grid, 8), ConfigError);  // 16 < 2*8+2
  CHECK_THROWS_AS(project(std::vector<double>(10, 0.0), grid, 4), ConfigError);
  samples[3] = std::nan("");
  CHECK_THROWS_AS(project(samples, grid, 4), ArgumentError);
}
