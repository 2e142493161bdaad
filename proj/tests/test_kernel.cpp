#include <gsl/gsl_integration.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "boltzmann/errors.hpp"
#include "boltzmann/kernel.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace boltzmann;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent reference: the mode integral evaluated exactly as defined,
// with q+ = (q+|q|w)/2 and q- = (q-|q|w)/2 formed explicitly. Shares only
// the quadrature rule definition with the implementation.
Complex naive_mode(const KernelConfig& cfg, const int* l, const int* m) {
  const double radius = cfg.effective_support_radius();
  const int n_rad = cfg.effective_radial_nodes();
  const int n_q = cfg.effective_angular_nodes_q();
  const int n_o = cfg.effective_angular_nodes_omega();
  gsl_integration_glfixed_table* gl = gsl_integration_glfixed_table_alloc(n_rad);
  gsl_integration_glfixed_table* glmu =
      cfg.dim == 3 ? gsl_integration_glfixed_table_alloc(n_o) : nullptr;

  Complex acc(0.0, 0.0);
  for (int i = 0; i < n_rad; ++i) {
    double r = 0.0, rw = 0.0;
    gsl_integration_glfixed_point(0.0, radius, i, &r, &rw, gl);

    // enumerate q directions
    std::vector<std::array<double, 3>> qdirs;
    std::vector<double> qws;
    if (cfg.dim == 2) {
      for (int a = 0; a < n_q; ++a) {
        const double phi = 2.0 * kPi * a / n_q;
        qdirs.push_back({std::cos(phi), std::sin(phi), 0.0});
        qws.push_back(2.0 * kPi / n_q);
      }
    } else {
      for (int t = 0; t < n_q; ++t) {
        const double theta = kPi * t / (n_q - 1);
        const double wt = kPi / (n_q - 1) *
                          ((t == 0 || t == n_q - 1) ? 0.5 : 1.0) *
                          std::sin(theta);
        for (int p = 0; p < n_q; ++p) {
          const double phi = 2.0 * kPi * p / n_q;
          qdirs.push_back({std::sin(theta) * std::cos(phi),
                           std::sin(theta) * std::sin(phi), std::cos(theta)});
          qws.push_back(wt * 2.0 * kPi / n_q);
        }
      }
    }

    std::vector<std::array<double, 3>> odirs;
    std::vector<double> ows;
    if (cfg.dim == 2) {
      for (int o = 0; o < n_o; ++o) {
        const double psi = 2.0 * kPi * o / n_o;
        odirs.push_back({std::cos(psi), std::sin(psi), 0.0});
        ows.push_back(2.0 * kPi / n_o);
      }
    } else {
      for (int i2 = 0; i2 < n_o; ++i2) {
        double mu = 0.0, wmu = 0.0;
        gsl_integration_glfixed_point(-1.0, 1.0, i2, &mu, &wmu, glmu);
        const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        for (int p = 0; p < n_o; ++p) {
          const double phi = 2.0 * kPi * p / n_o;
          odirs.push_back({st * std::cos(phi), st * std::sin(phi), mu});
          ows.push_back(wmu * 2.0 * kPi / n_o);
        }
      }
    }

    for (std::size_t a = 0; a < qdirs.size(); ++a) {
      for (std::size_t o = 0; o < odirs.size(); ++o) {
        double cos_theta = 0.0;
        double qp[3], qm[3];
        for (int d = 0; d < cfg.dim; ++d) cos_theta += qdirs[a][d] * odirs[o][d];
        for (int d = 0; d < cfg.dim; ++d) {
          qp[d] = r / 2.0 * (qdirs[a][d] + odirs[o][d]);
          qm[d] = r / 2.0 * (qdirs[a][d] - odirs[o][d]);
        }
        double phase = 0.0;
        for (int d = 0; d < cfg.dim; ++d) phase -= l[d] * qp[d] + m[d] * qm[d];
        const double w = rw * std::pow(r, cfg.vhs_exponent + cfg.dim - 1) * qws[a] *
                         ows[o] * cfg.angular.value(cos_theta, cfg.dim);
        acc += w * Complex(std::cos(phase), std::sin(phase));
      }
    }
  }
  gsl_integration_glfixed_table_free(gl);
  if (glmu) gsl_integration_glfixed_table_free(glmu);
  return acc;
}

// explicit small node counts, for naive-reference comparisons
KernelConfig small_2d_config(int order = 4) {
  KernelConfig cfg;
  cfg.dim = 2;
  cfg.order = order;
  cfg.radial_nodes = 16;
  cfg.angular_nodes_q = 16;
  cfg.angular_nodes_omega = 16;
  return cfg;
}

// order-scaled defaults, for table builds
KernelConfig auto_2d_config(int order) {
  KernelConfig cfg;
  cfg.dim = 2;
  cfg.order = order;
  return cfg;
}

}  // namespace

TEST_CASE("B(0,0) equals the disk area for Maxwell molecules") {
  KernelConfig cfg = small_2d_config();
  const double radius = cfg.effective_support_radius();
  const Complex b00 = compute_mode(cfg, {0, 0}, {0, 0});
  CHECK(std::abs(b00 - Complex(kPi * radius * radius, 0.0)) < 1e-10);
}

TEST_CASE("default support radius uses the dealiasing factor") {
  CHECK(KernelConfig::dealias_factor() ==
        doctest::Approx(2.0 / (3.0 + std::sqrt(2.0))).epsilon(1e-15));
  KernelConfig cfg;
  CHECK(cfg.effective_support_radius() ==
        doctest::Approx(2.0 * KernelConfig::dealias_factor() * kPi).epsilon(1e-15));
  cfg.support_radius = 1.25;
  CHECK(cfg.effective_support_radius() == 1.25);
}

TEST_CASE("fast separable path agrees with the defining integral") {
  KernelConfig cfg = small_2d_config();
  const int pairs[][4] = {{0, 0, 0, 0}, {1, 0, 0, 0},  {2, -1, 1, 3},
                          {4, 4, -4, 2}, {-3, 2, 0, -4}, {1, 1, 1, 1}};
  for (const auto& p : pairs) {
    const int l[2] = {p[0], p[1]};
    const int m[2] = {p[2], p[3]};
    const Complex fast = compute_mode(cfg, l, m);
    const Complex ref = naive_mode(cfg, l, m);
    CHECK(std::abs(fast - ref) < 1e-10);
  }
}

TEST_CASE("fast separable path agrees with the defining integral in 3d") {
  KernelConfig cfg;
  cfg.dim = 3;
  cfg.order = 2;
  cfg.radial_nodes = 8;
  cfg.angular_nodes_q = 8;
  cfg.angular_nodes_omega = 8;
  const int pairs[][6] = {{0, 0, 0, 0, 0, 0}, {1, 0, -1, 0, 2, 1},
                          {2, -2, 1, -1, 0, 2}, {1, 1, 1, -1, -1, -1}};
  for (const auto& p : pairs) {
    const int l[3] = {p[0], p[1], p[2]};
    const int m[3] = {p[3], p[4], p[5]};
    CHECK(std::abs(compute_mode(cfg, l, m) - naive_mode(cfg, l, m)) < 1e-9);
  }
}

TEST_CASE("tabulated constant kernel matches the isotropic fast path") {
  KernelConfig iso = small_2d_config();
  KernelConfig tab = iso;
  tab.angular.kind = AngularKernel::Kind::Tabulated;
  tab.angular.table.assign(9, 1.0 / (2.0 * kPi));
  const int pairs[][4] = {{1, 0, 0, 0}, {2, -1, 1, 3}, {3, 2, -2, 0}};
  for (const auto& p : pairs) {
    const int l[2] = {p[0], p[1]};
    const int m[2] = {p[2], p[3]};
    CHECK(std::abs(compute_mode(iso, l, m) - compute_mode(tab, l, m)) < 1e-12);
  }
}

TEST_CASE("VHS exponent changes only the radial weight") {
  KernelConfig cfg = small_2d_config();
  cfg.vhs_exponent = 1.0;  // hard spheres
  // with l=m=0 the integrand reduces to |q|, so B(0,0) = 2*pi*R^3/3
  const double radius = cfg.effective_support_radius();
  const Complex b00 = compute_mode(cfg, {0, 0}, {0, 0});
  CHECK(std::abs(b00 - Complex(2.0 * kPi * radius * radius * radius / 3.0, 0.0)) <
        1e-10);
  const int l[2] = {2, -1};
  const int m[2] = {0, 3};
  CHECK(std::abs(compute_mode(cfg, l, m) - naive_mode(cfg, l, m)) < 1e-10);
}

TEST_CASE("selected modes are stable under node doubling") {
  KernelConfig cfg = auto_2d_config(8);
  KernelConfig doubled = cfg;
  doubled.radial_nodes = 2 * cfg.effective_radial_nodes();
  doubled.angular_nodes_q = 2 * cfg.effective_angular_nodes_q();
  doubled.angular_nodes_omega = 2 * cfg.effective_angular_nodes_omega();
  const int pairs[][4] = {{5, -8, 3, 2}, {8, 8, -8, -8}, {1, 2, 3, 4}};
  for (const auto& p : pairs) {
    const int l[2] = {p[0], p[1]};
    const int m[2] = {p[2], p[3]};
    CHECK(std::abs(compute_mode(cfg, l, m) - compute_mode(doubled, l, m)) < 1e-9);
  }
}

TEST_CASE("build_table: diagonal is exactly zero and symmetry is exact") {
  KernelConfig cfg = auto_2d_config(4);
  const KernelTable table = build_table(cfg);
  const std::size_t field = table.modes_per_field();
  REQUIRE(table.modes.size() == field * field);

  for (std::size_t m = 0; m < field; ++m) {
    CHECK(table.beta(m, m).real() == 0.0);
    CHECK(table.beta(m, m).imag() == 0.0);
  }

  // beta(-l,-m) == conj(beta(l,m)); index negation reverses the layout
  double worst = 0.0;
  for (std::size_t l = 0; l < field; ++l)
    for (std::size_t m = 0; m < field; ++m) {
      const Complex d =
          table.beta(field - 1 - l, field - 1 - m) - std::conj(table.beta(l, m));
      worst = std::max(worst, std::abs(d));
    }
  CHECK(worst == 0.0);

  // spot-check the conjugation property against the independent reference
  const int l0[2] = {2, -1};
  const int m0[2] = {1, 3};
  const int l0n[2] = {-2, 1};
  const int m0n[2] = {-1, -3};
  CHECK(std::abs(naive_mode(cfg, l0n, m0n) - std::conj(naive_mode(cfg, l0, m0))) <
        1e-12);
}

TEST_CASE("build_table entries match per-pair compute_mode bitwise") {
  KernelConfig cfg = auto_2d_config(8);
  const KernelTable table = build_table(cfg);
  const std::size_t field = table.modes_per_field();
  const int side = 2 * cfg.order + 1;

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> dist(0, field * field - 1);
  for (int n = 0; n < 300; ++n) {
    const std::size_t pair = dist(rng);
    int l[2], m[2];
    l[0] = static_cast<int>(pair / field) / side - cfg.order;
    l[1] = static_cast<int>(pair / field) % side - cfg.order;
    m[0] = static_cast<int>(pair % field) / side - cfg.order;
    m[1] = static_cast<int>(pair % field) % side - cfg.order;
    const Complex direct = compute_beta_mode(cfg, l, m);
    const Complex stored = table.modes[pair];
    CHECK(direct.real() == stored.real());
    CHECK(direct.imag() == stored.imag());
  }
}

TEST_CASE("build_table is deterministic") {
  KernelConfig cfg = auto_2d_config(3);
  const KernelTable a = build_table(cfg);
  const KernelTable b = build_table(cfg);
  REQUIRE(a.modes.size() == b.modes.size());
  CHECK(std::memcmp(a.modes.data(), b.modes.data(),
                    a.modes.size() * sizeof(Complex)) == 0);
}

TEST_CASE("refinement check rejects unconverged quadrature") {
  KernelConfig cfg = small_2d_config(4);  // 16-node rules alias at this order
  cfg.radial_nodes = 2;
  cfg.angular_nodes_q = 2;
  cfg.angular_nodes_omega = 2;
  cfg.refinement_tolerance = 1e-8;
  cfg.refinement_fraction = 0.05;
  CHECK_THROWS_AS(build_table(cfg), RefinementError);
}

TEST_CASE("3d table builds under a tolerance matched to the polar rule") {
  KernelConfig cfg;
  cfg.dim = 3;
  cfg.order = 2;
  cfg.radial_nodes = 8;
  cfg.angular_nodes_q = 8;
  cfg.angular_nodes_omega = 8;
  // the polar q-angle trapezoid is second order, so node doubling still
  // moves large modes at the percent scale here
  cfg.refinement_tolerance = 10.0;
  const KernelTable table = build_table(cfg);
  const std::size_t field = table.modes_per_field();
  for (std::size_t m = 0; m < field; ++m) {
    CHECK(table.beta(m, m).real() == 0.0);
    CHECK(table.beta(m, m).imag() == 0.0);
  }
  // volume of the support ball at l=m=0
  const double radius = cfg.effective_support_radius();
  const Complex b00 = compute_mode(cfg, {0, 0, 0}, {0, 0, 0});
  CHECK(std::abs(b00 - Complex(4.0 / 3.0 * kPi * std::pow(radius, 3), 0.0)) <
        0.05 * std::abs(b00));
}

TEST_CASE("kernel cache round trip") {
  testutil::TempDir tmp;
  const auto path = tmp.path() / "kernel.bkm";

  KernelConfig cfg = auto_2d_config(4);
  const KernelTable table = build_table(cfg);
  save_table(table, path);

  SUBCASE("bitwise round trip") {
    const KernelTable loaded = load_table(path, cfg);
    REQUIRE(loaded.modes.size() == table.modes.size());
    CHECK(std::memcmp(loaded.modes.data(), table.modes.data(),
                      table.modes.size() * sizeof(Complex)) == 0);
    CHECK(loaded.checksum == table.checksum);
  }

  SUBCASE("file size follows the documented layout") {
    const std::size_t field = table.modes_per_field();
    const auto bytes = std::filesystem::file_size(path);
    CHECK(bytes == 8 + 76 + 16 * field * field + 32);
  }

  SUBCASE("config mismatch is cache-invalid") {
    KernelConfig other = cfg;
    other.order = 5;
    CHECK_THROWS_AS(load_table(path, other), CacheInvalidError);
  }

  SUBCASE("corrupted magic bytes are a format error") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_table(path, cfg), FormatError);
  }

  SUBCASE("truncated payload is a format error") {
    const auto bytes = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, bytes - 64);
    CHECK_THROWS_AS(load_table(path, cfg), FormatError);
  }

  SUBCASE("flipped payload bit fails the trailer hash") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8 + 76 + 128);
    char c;
    f.seekg(8 + 76 + 128);
    f.read(&c, 1);
    c ^= 0x01;
    f.seekp(8 + 76 + 128);
    f.write(&c, 1);
    f.close();
    CHECK_THROWS_AS(load_table(path, cfg), FormatError);
  }
}

TEST_CASE("kernel config validation") {
  KernelConfig cfg = small_2d_config();
  cfg.vhs_exponent = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  cfg.vhs_exponent = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  cfg.support_radius = 7.0;  // > 2*pi
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  cfg.angular_nodes_q = 15;  // odd
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  cfg.radial_nodes = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  cfg.dim = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_2d_config();
  CHECK_NOTHROW(cfg.validate());
}
