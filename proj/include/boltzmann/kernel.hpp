#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "boltzmann/field.hpp"

namespace boltzmann {

/// Angular collision kernel b(cos theta).
struct AngularKernel {
  enum class Kind : std::uint32_t { IsotropicNormalized = 0, Tabulated = 1 };
  Kind kind = Kind::IsotropicNormalized;
  /// Uniform samples of b over cos(theta) in [-1, 1], linearly interpolated.
  /// Only used when kind == Tabulated. Values are taken as-is (the caller
  /// owns the time-unit normalization).
  std::vector<double> table;

  double value(double cos_theta, int dim) const;
  /// Constant b decouples the q-angle and omega sums of the mode integral.
  bool separable() const { return kind == Kind::IsotropicNormalized; }
};

struct KernelConfig {
  int dim = 2;
  int order = 8;
  double vhs_exponent = 0.0;   // |q|^lambda, 0 = Maxwell molecules, 1 = hard spheres
  double support_radius = 0.0; // radius of the relative-velocity ball; 0 = default
  // Node counts of 0 select order-dependent defaults sized to the maximum
  // phase R*sqrt(d)*N of the mode integrand (see effective_* below).
  int radial_nodes = 0;
  int angular_nodes_q = 0;
  int angular_nodes_omega = 0;
  AngularKernel angular;

  // Accuracy gate for build_table, not part of the table identity.
  double refinement_tolerance = 1e-8;
  double refinement_fraction = 0.01;

  /// Classical anti-aliasing factor 2/(3+sqrt(2)).
  static double dealias_factor();
  /// 2 * dealias_factor * pi.
  static double default_support_radius();
  double effective_support_radius() const;

  /// Largest phase of the oscillatory mode integrand, R*sqrt(d)*N.
  double max_phase() const;
  int effective_radial_nodes() const;
  int effective_angular_nodes_q() const;
  int effective_angular_nodes_omega() const;

  void validate() const;
  /// SHA-256 over the identity fields (dim, order, exponent, radius,
  /// node counts, angular kernel). Refinement settings are excluded.
  std::array<std::uint8_t, 32> content_hash() const;
};

struct RefinementReport {
  double max_discrepancy = 0.0;
  std::array<int, 3> worst_l{0, 0, 0};
  std::array<int, 3> worst_m{0, 0, 0};
  int samples = 0;
};

/// Kernel modes beta(l,m) = B(l,m) - (B(l,l) + B(m,m))/2 for all index
/// pairs, stored row-major over (shifted l, shifted m) with the
/// SpectralField layout. The loss diagonal is split between the two
/// arguments, which leaves the quadratic form unchanged and makes the
/// bilinear extension symmetric -- the identity behind the
/// equilibrium-preserving factorization Q(f+M, f-M) = Q(f,f) - Q(M,M).
struct KernelTable {
  KernelConfig config;
  std::vector<Complex> modes;
  std::array<std::uint8_t, 32> checksum{};
  RefinementReport refinement;

  std::size_t modes_per_field() const;
  const Complex& beta(std::size_t l_lin, std::size_t m_lin) const {
    return modes[l_lin * modes_per_field() + m_lin];
  }
};

/// Quadrature approximation of the mode
///   B(l,m) = int_{|q|<=R} int_{S^{d-1}} |q|^lambda b(cos theta)
///            exp(-i(l.q+ + m.q-)) domega dq,
/// with q+ = (q+|q|omega)/2, q- = (q-|q|omega)/2. Radial Gauss-Legendre on
/// [0,R], uniform trapezoid in the q angle(s), and trapezoid (d=2) or
/// Gauss(mu) x trapezoid(phi) (d=3) over omega.
Complex compute_mode(const KernelConfig& config, const int* l, const int* m);
Complex compute_mode(const KernelConfig& config, std::initializer_list<int> l,
                     std::initializer_list<int> m);

/// compute_mode(l,m) - (compute_mode(l,l) + compute_mode(m,m))/2.
Complex compute_beta_mode(const KernelConfig& config, const int* l, const int* m);

/// Builds the full (2N+1)^{2d} table. Entries match per-pair compute_mode
/// results bitwise. Runs a refinement check (doubled node counts on a
/// random sample of pairs, deterministic in the config) and throws
/// RefinementError when the discrepancy exceeds the configured tolerance.
KernelTable build_table(const KernelConfig& config);

void save_table(const KernelTable& table, const std::filesystem::path& path);
KernelTable load_table(const std::filesystem::path& path,
                       const KernelConfig& expected);

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t size);
std::string hex_digest(const std::array<std::uint8_t, 32>& digest);

}  // namespace boltzmann
