#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace boltzmann {

using Complex = std::complex<double>;

/// Uniform periodic grid on [-pi, pi)^dim in scaled velocity units.
struct VelocityGrid {
  int dim = 0;
  int points_per_axis = 0;

  VelocityGrid(int dim, int points_per_axis);

  /// Smallest power-of-two grid that interpolates degree-N polynomials
  /// exactly (points_per_axis >= 2N+2).
  static VelocityGrid for_order(int dim, int order);

  double node(int j) const;            // -pi + 2*pi*j/n
  double spacing() const;              // 2*pi/n
  std::vector<double> nodes() const;   // per-axis node list
  std::size_t total_points() const;    // n^dim
};

/// Complex Fourier coefficients of a periodic velocity distribution,
/// indexed by k in {-N,...,N}^dim, stored row-major over k+N per axis
/// (axis 0 slowest). The same layout is shared by KernelTable.
struct SpectralField {
  int dim = 0;
  int order = 0;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  SpectralField(int dim, int order);

  int side() const { return 2 * order + 1; }
  std::size_t size() const { return coeffs.size(); }

  std::size_t linear_index(const int* k) const;
  Complex& at(const int* k);
  const Complex& at(const int* k) const;
  Complex& at(std::initializer_list<int> k);
  const Complex& at(std::initializer_list<int> k) const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// y += a*x
void axpy(double a, const SpectralField& x, SpectralField& y);

bool all_finite(const SpectralField& f);

/// max_k |coeff(k)|
double coeff_linf(const SpectralField& f);

/// max_k |coeff(-k) - conj(coeff(k))|
double conjugate_symmetry_defect(const SpectralField& f);

enum class NormKind { L2, Hr, L1Grid, LinfGrid };

/// Trigonometric interpolation of real samples on `grid`, truncated to
/// |k_j| <= order. Requires points_per_axis >= 2*order+2.
SpectralField project(const std::vector<double>& samples, const VelocityGrid& grid,
                      int order);

/// Pointwise values of the trigonometric polynomial at the grid nodes
/// (real parts; fields are expected to be conjugate-symmetric).
std::vector<double> evaluate(const SpectralField& field, const VelocityGrid& grid);

/// Embed into the larger space P^new_order; evaluate is unchanged.
SpectralField pad(const SpectralField& field, int new_order);

/// Truncate back to a smaller order (drops the outer coefficients).
SpectralField truncate(const SpectralField& field, int new_order);

/// L2 and Hr are evaluated from coefficients (Parseval); L1Grid and
/// LinfGrid are trapezoid-grid approximations of the continuum norms.
double norm(const SpectralField& field, const VelocityGrid& grid, NormKind kind,
            double sobolev_r = 0.0);

/// Same, on the default grid for the field's order.
double norm(const SpectralField& field, NormKind kind, double sobolev_r = 0.0);

}  // namespace boltzmann
