#include "boltzmann/kernel.hpp"

#include <gsl/gsl_integration.h>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "boltzmann/detail/complex_ops.hpp"
#include "boltzmann/errors.hpp"

namespace boltzmann {

namespace {

using detail::cmul;

constexpr double kPi = std::numbers::pi;
constexpr char kMagic[8] = {'B', 'K', 'M', 'T', '0', '0', '0', '1'};

int pow_int(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void decode_index(std::size_t lin, int side, int dim, int order, int* k) {
  for (int a = dim - 1; a >= 0; --a) {
    k[a] = static_cast<int>(lin % side) - order;
    lin /= side;
  }
}

// ---------------------------------------------------------------------------
// Quadrature rules

struct RadialRule {
  std::vector<double> r;
  std::vector<double> w;  // Gauss-Legendre weight times r^(lambda + dim - 1)
};

struct AngularRule {
  std::vector<std::array<double, 3>> dirs;
  std::vector<double> weights;
};

RadialRule make_radial_rule(const KernelConfig& cfg, int nodes) {
  RadialRule rule;
  rule.r.resize(static_cast<std::size_t>(nodes));
  rule.w.resize(static_cast<std::size_t>(nodes));
  gsl_integration_glfixed_table* t =
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nodes));
  const double radius = cfg.effective_support_radius();
  for (int i = 0; i < nodes; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, radius, i, &x, &w, t);
    rule.r[i] = x;
    rule.w[i] = w * std::pow(x, cfg.vhs_exponent + cfg.dim - 1);
  }
  gsl_integration_glfixed_table_free(t);
  return rule;
}

// Uniform trapezoid in the q angle(s). For d=3 the polar angle uses the
// composite trapezoid on [0,pi] (the sin(theta) jacobian vanishes at the
// endpoints) and the azimuth the periodic trapezoid.
AngularRule make_q_angle_rule(int dim, int nodes) {
  AngularRule rule;
  if (dim == 2) {
    const double w = 2.0 * kPi / nodes;
    for (int j = 0; j < nodes; ++j) {
      const double phi = 2.0 * kPi * j / nodes;
      rule.dirs.push_back({std::cos(phi), std::sin(phi), 0.0});
      rule.weights.push_back(w);
    }
  } else {
    const double wt = kPi / (nodes - 1);
    const double wp = 2.0 * kPi / nodes;
    for (int t = 0; t < nodes; ++t) {
      const double theta = kPi * t / (nodes - 1);
      const double tw =
          wt * ((t == 0 || t == nodes - 1) ? 0.5 : 1.0) * std::sin(theta);
      for (int p = 0; p < nodes; ++p) {
        const double phi = 2.0 * kPi * p / nodes;
        rule.dirs.push_back({std::sin(theta) * std::cos(phi),
                             std::sin(theta) * std::sin(phi), std::cos(theta)});
        rule.weights.push_back(tw * wp);
      }
    }
  }
  return rule;
}

// Unit-sphere rule for omega: periodic trapezoid (d=2) or product
// Gauss(mu) x trapezoid(phi) (d=3). `factor` scales every weight (used to
// fold the constant isotropic b into the rule).
AngularRule make_omega_rule(int dim, int nodes, double factor) {
  AngularRule rule;
  if (dim == 2) {
    const double w = factor * 2.0 * kPi / nodes;
    for (int j = 0; j < nodes; ++j) {
      const double psi = 2.0 * kPi * j / nodes;
      rule.dirs.push_back({std::cos(psi), std::sin(psi), 0.0});
      rule.weights.push_back(w);
    }
  } else {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(nodes);
    const double wp = 2.0 * kPi / nodes;
    for (int i = 0; i < nodes; ++i) {
      double mu = 0.0, wmu = 0.0;
      gsl_integration_glfixed_point(-1.0, 1.0, i, &mu, &wmu, t);
      const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      for (int p = 0; p < nodes; ++p) {
        const double phi = 2.0 * kPi * p / nodes;
        rule.dirs.push_back({st * std::cos(phi), st * std::sin(phi), mu});
        rule.weights.push_back(factor * wmu * wp);
      }
    }
    gsl_integration_glfixed_table_free(t);
  }
  return rule;
}

// sum_j w_j exp(-i * half_r * dot(s, e_j)). The integer vector s is
// canonicalized (first nonzero component made positive) and the result
// conjugated back, so angular_sum(-s) == conj(angular_sum(s)) bitwise for
// the symmetric node sets enforced by KernelConfig::validate.
Complex angular_sum(const AngularRule& rule, double half_r, const int* s, int dim) {
  int canon[3] = {s[0], s[1], dim == 3 ? s[2] : 0};
  bool flipped = false;
  for (int a = 0; a < dim; ++a) {
    if (canon[a] != 0) {
      flipped = canon[a] < 0;
      break;
    }
  }
  if (flipped)
    for (int a = 0; a < dim; ++a) canon[a] = -canon[a];

  double sre = 0.0, sim = 0.0;
  const std::size_t count = rule.dirs.size();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& e = rule.dirs[i];
    double dot = canon[0] * e[0] + canon[1] * e[1];
    if (dim == 3) dot += canon[2] * e[2];
    const double phase = -half_r * dot;
    sre += rule.weights[i] * std::cos(phase);
    sim += rule.weights[i] * std::sin(phase);
  }
  return flipped ? Complex(sre, -sim) : Complex(sre, sim);
}

// ---------------------------------------------------------------------------
// Separable evaluation (isotropic b): the q-angle and omega sums decouple,
//   B(l,m) = sum_i w_i * A_i(l+m) * C_i(l-m),
// which is a pure reordering of the full tensor-product quadrature sum.

struct SeparableContext {
  int dim = 0;
  int span = 0;  // components of s=l+m range over [-span, span]
  RadialRule radial;
  AngularRule q_rule;
  AngularRule omega_rule;
};

SeparableContext make_separable_context(const KernelConfig& cfg, int factor) {
  SeparableContext ctx;
  ctx.dim = cfg.dim;
  ctx.span = 2 * cfg.order;
  ctx.radial = make_radial_rule(cfg, cfg.effective_radial_nodes() * factor);
  ctx.q_rule = make_q_angle_rule(cfg.dim, cfg.effective_angular_nodes_q() * factor);
  ctx.omega_rule =
      make_omega_rule(cfg.dim, cfg.effective_angular_nodes_omega() * factor,
                      cfg.angular.value(0.0, cfg.dim));
  return ctx;
}

Complex contract(const RadialRule& radial, const Complex* a, const Complex* c) {
  Complex acc(0.0, 0.0);
  const int n = static_cast<int>(radial.r.size());
  for (int i = 0; i < n; ++i) acc += radial.w[i] * cmul(a[i], c[i]);
  return acc;
}

// One-off separable mode evaluation (no precomputed tables).
Complex mode_separable(const SeparableContext& ctx, const int* l, const int* m) {
  int s[3] = {0, 0, 0};
  int u[3] = {0, 0, 0};
  for (int a = 0; a < ctx.dim; ++a) {
    s[a] = l[a] + m[a];
    u[a] = l[a] - m[a];
  }
  const int n = static_cast<int>(ctx.radial.r.size());
  std::vector<Complex> av(n), cv(n);
  for (int i = 0; i < n; ++i) {
    const double half_r = ctx.radial.r[i] / 2.0;
    av[i] = angular_sum(ctx.q_rule, half_r, s, ctx.dim);
    cv[i] = angular_sum(ctx.omega_rule, half_r, u, ctx.dim);
  }
  return contract(ctx.radial, av.data(), cv.data());
}

// Angular sums tabulated over every s in [-span, span]^dim, radial-major
// per s for a contiguous contraction.
struct SeparableTables {
  SeparableContext ctx;
  std::vector<Complex> a;  // q-angle sums
  std::vector<Complex> c;  // omega sums

  std::size_t lin(const int* s) const {
    const int side = 2 * ctx.span + 1;
    std::size_t idx = 0;
    for (int a2 = 0; a2 < ctx.dim; ++a2) idx = idx * side + (s[a2] + ctx.span);
    return idx;
  }
};

void fill_angular_table(const SeparableContext& ctx, const AngularRule& rule,
                        std::vector<Complex>& out) {
  const int side = 2 * ctx.span + 1;
  const std::size_t count = static_cast<std::size_t>(pow_int(side, ctx.dim));
  const int radial = static_cast<int>(ctx.radial.r.size());
  out.assign(count * radial, Complex(0.0, 0.0));

#pragma omp parallel for schedule(static)
  for (long long lin = 0; lin < static_cast<long long>(count); ++lin) {
    // compute the canonical half, mirror the rest below
    if (static_cast<std::size_t>(lin) > count - 1 - lin) continue;
    int s[3] = {0, 0, 0};
    decode_index(static_cast<std::size_t>(lin), side, ctx.dim, ctx.span, s);
    Complex* dst = out.data() + static_cast<std::size_t>(lin) * radial;
    for (int i = 0; i < radial; ++i)
      dst[i] = angular_sum(rule, ctx.radial.r[i] / 2.0, s, ctx.dim);
  }
#pragma omp parallel for schedule(static)
  for (long long lin = 0; lin < static_cast<long long>(count); ++lin) {
    const std::size_t mirror = count - 1 - static_cast<std::size_t>(lin);
    if (static_cast<std::size_t>(lin) <= mirror) continue;
    const Complex* src = out.data() + mirror * radial;
    Complex* dst = out.data() + static_cast<std::size_t>(lin) * radial;
    for (int i = 0; i < radial; ++i) dst[i] = std::conj(src[i]);
  }
}

SeparableTables make_separable_tables(const KernelConfig& cfg, int factor) {
  SeparableTables tabs;
  tabs.ctx = make_separable_context(cfg, factor);
  fill_angular_table(tabs.ctx, tabs.ctx.q_rule, tabs.a);
  fill_angular_table(tabs.ctx, tabs.ctx.omega_rule, tabs.c);
  return tabs;
}

Complex mode_from_tables(const SeparableTables& tabs, const int* l, const int* m) {
  int s[3] = {0, 0, 0};
  int u[3] = {0, 0, 0};
  for (int a = 0; a < tabs.ctx.dim; ++a) {
    s[a] = l[a] + m[a];
    u[a] = l[a] - m[a];
  }
  const int radial = static_cast<int>(tabs.ctx.radial.r.size());
  return contract(tabs.ctx.radial, tabs.a.data() + tabs.lin(s) * radial,
                  tabs.c.data() + tabs.lin(u) * radial);
}

// ---------------------------------------------------------------------------
// Direct evaluation (tabulated b): full tensor-product sum with pointwise
// b(cos theta). Pairs are canonicalized so that mirrored modes conjugate
// bitwise, matching the separable path's guarantee.

struct DirectContext {
  const KernelConfig* cfg = nullptr;
  RadialRule radial;
  AngularRule q_rule;
  AngularRule omega_rule;  // weight factor 1; b applied pointwise
};

DirectContext make_direct_context(const KernelConfig& cfg, int factor) {
  DirectContext ctx;
  ctx.cfg = &cfg;
  ctx.radial = make_radial_rule(cfg, cfg.effective_radial_nodes() * factor);
  ctx.q_rule = make_q_angle_rule(cfg.dim, cfg.effective_angular_nodes_q() * factor);
  ctx.omega_rule =
      make_omega_rule(cfg.dim, cfg.effective_angular_nodes_omega() * factor, 1.0);
  return ctx;
}

Complex mode_direct(const DirectContext& ctx, const int* l, const int* m) {
  const int dim = ctx.cfg->dim;
  int cl[3] = {0, 0, 0};
  int cm[3] = {0, 0, 0};
  bool flipped = false;
  for (int a = 0; a < 2 * dim; ++a) {
    const int v = a < dim ? l[a] : m[a - dim];
    if (v != 0) {
      flipped = v < 0;
      break;
    }
  }
  for (int a = 0; a < dim; ++a) {
    cl[a] = flipped ? -l[a] : l[a];
    cm[a] = flipped ? -m[a] : m[a];
  }

  double sre = 0.0, sim = 0.0;
  const std::size_t nq = ctx.q_rule.dirs.size();
  const std::size_t no = ctx.omega_rule.dirs.size();
  for (std::size_t ir = 0; ir < ctx.radial.r.size(); ++ir) {
    const double half_r = ctx.radial.r[ir] / 2.0;
    const double rw = ctx.radial.w[ir];
    for (std::size_t a = 0; a < nq; ++a) {
      const auto& eq = ctx.q_rule.dirs[a];
      double dot_sq = 0.0;
      for (int d = 0; d < dim; ++d)
        dot_sq += static_cast<double>(cl[d] + cm[d]) * eq[d];
      const double wq = rw * ctx.q_rule.weights[a];
      for (std::size_t o = 0; o < no; ++o) {
        const auto& eo = ctx.omega_rule.dirs[o];
        double cos_theta = 0.0, dot_u = 0.0;
        for (int d = 0; d < dim; ++d) {
          cos_theta += eq[d] * eo[d];
          dot_u += static_cast<double>(cl[d] - cm[d]) * eo[d];
        }
        const double w =
            wq * ctx.omega_rule.weights[o] * ctx.cfg->angular.value(cos_theta, dim);
        const double phase = -half_r * (dot_sq + dot_u);
        sre += w * std::cos(phase);
        sim += w * std::sin(phase);
      }
    }
  }
  return flipped ? Complex(sre, -sim) : Complex(sre, sim);
}

// ---------------------------------------------------------------------------
// Refinement check: recompute a deterministic random sample of pairs with
// doubled node counts and report the worst discrepancy.

RefinementReport run_refinement(const KernelConfig& cfg,
                                const std::vector<Complex>& modes) {
  const int side = 2 * cfg.order + 1;
  const std::size_t field = static_cast<std::size_t>(pow_int(side, cfg.dim));
  const std::size_t total = field * field;

  auto count = static_cast<std::size_t>(
      std::llround(cfg.refinement_fraction * static_cast<double>(total)));
  count = std::clamp<std::size_t>(count, 1, 200000);

  const auto hash = cfg.content_hash();
  std::uint64_t seed = 0;
  std::memcpy(&seed, hash.data(), sizeof(seed));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dist(0, total - 1);

  RefinementReport report;
  report.samples = static_cast<int>(count);

  if (cfg.angular.separable()) {
    const SeparableTables doubled = make_separable_tables(cfg, 2);
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t pair = dist(rng);
      int l[3] = {0, 0, 0}, m[3] = {0, 0, 0};
      decode_index(pair / field, side, cfg.dim, cfg.order, l);
      decode_index(pair % field, side, cfg.dim, cfg.order, m);
      const Complex refined =
          mode_from_tables(doubled, l, m) -
          0.5 * (mode_from_tables(doubled, l, l) + mode_from_tables(doubled, m, m));
      const double d = std::abs(refined - modes[pair]);
      if (d > report.max_discrepancy) {
        report.max_discrepancy = d;
        for (int a = 0; a < 3; ++a) {
          report.worst_l[a] = l[a];
          report.worst_m[a] = m[a];
        }
      }
    }
  } else {
    const DirectContext doubled = make_direct_context(cfg, 2);
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t pair = dist(rng);
      int l[3] = {0, 0, 0}, m[3] = {0, 0, 0};
      decode_index(pair / field, side, cfg.dim, cfg.order, l);
      decode_index(pair % field, side, cfg.dim, cfg.order, m);
      const Complex refined =
          mode_direct(doubled, l, m) -
          0.5 * (mode_direct(doubled, l, l) + mode_direct(doubled, m, m));
      const double d = std::abs(refined - modes[pair]);
      if (d > report.max_discrepancy) {
        report.max_discrepancy = d;
        for (int a = 0; a < 3; ++a) {
          report.worst_l[a] = l[a];
          report.worst_m[a] = m[a];
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Little-endian serialization helpers

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

double get_f64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(v);
}

std::string header_bytes(const KernelConfig& cfg) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(cfg.dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.order));
  put_f64(out, cfg.vhs_exponent);
  put_f64(out, cfg.effective_support_radius());
  put_u32(out, static_cast<std::uint32_t>(cfg.effective_radial_nodes()));
  put_u32(out, static_cast<std::uint32_t>(cfg.effective_angular_nodes_q()));
  put_u32(out, static_cast<std::uint32_t>(cfg.effective_angular_nodes_omega()));
  put_u32(out, static_cast<std::uint32_t>(cfg.angular.kind));
  put_u32(out, static_cast<std::uint32_t>(cfg.angular.table.size()));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

double AngularKernel::value(double cos_theta, int dim) const {
  if (kind == Kind::IsotropicNormalized)
    return dim == 2 ? 1.0 / (2.0 * kPi) : 1.0 / (4.0 * kPi);
  const double x = std::clamp(cos_theta, -1.0, 1.0);
  const std::size_t n = table.size();
  const double t = (x + 1.0) / 2.0 * static_cast<double>(n - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(t), n - 2);
  const double frac = t - static_cast<double>(i);
  return table[i] * (1.0 - frac) + table[i + 1] * frac;
}

double KernelConfig::dealias_factor() { return 2.0 / (3.0 + std::sqrt(2.0)); }

double KernelConfig::default_support_radius() {
  return 2.0 * dealias_factor() * kPi;
}

double KernelConfig::effective_support_radius() const {
  return support_radius > 0.0 ? support_radius : default_support_radius();
}

double KernelConfig::max_phase() const {
  return effective_support_radius() * std::sqrt(static_cast<double>(dim)) * order;
}

// The q-angle and omega trapezoid sums alias Bessel-like terms J_n(z) with
// z up to max_phase(); sizing n past the Airy transition zone keeps the
// node-doubling discrepancy near rounding for d=2.
int KernelConfig::effective_angular_nodes_q() const {
  if (angular_nodes_q > 0) return angular_nodes_q;
  const double z = max_phase();
  const int n = static_cast<int>(std::ceil(z + 9.5 * std::cbrt(z) + 10.0));
  return n + (n % 2);
}

int KernelConfig::effective_angular_nodes_omega() const {
  if (angular_nodes_omega > 0) return angular_nodes_omega;
  const double z = max_phase();
  const int n = static_cast<int>(std::ceil(z + 9.5 * std::cbrt(z) + 10.0));
  return n + (n % 2);
}

int KernelConfig::effective_radial_nodes() const {
  if (radial_nodes > 0) return radial_nodes;
  const double z = max_phase();
  const int wanted = static_cast<int>(std::ceil(0.45 * z)) + 12;
  // round up to a node count with precomputed high-precision Gauss-Legendre
  // coefficients; the on-the-fly tables are only ~1e-11 accurate
  for (int size : {16, 20, 32, 64, 96, 100, 128, 256, 512, 1024})
    if (wanted <= size) return size;
  return wanted;
}

void KernelConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("kernel: dim must be 2 or 3");
  if (order < 1) throw ConfigError("kernel: order must be >= 1");
  if (vhs_exponent < 0.0 || vhs_exponent > 1.0)
    throw ConfigError("kernel: vhs_exponent must lie in [0, 1]");
  const double radius = effective_support_radius();
  if (!(radius > 0.0) || radius > 2.0 * kPi)
    throw ConfigError("kernel: support_radius must lie in (0, 2*pi]");
  if (effective_radial_nodes() < 2)
    throw ConfigError("kernel: radial_nodes must be >= 2");
  if (effective_angular_nodes_q() < 2 || effective_angular_nodes_omega() < 2)
    throw ConfigError("kernel: angular node counts must be >= 2");
  // Even angular counts keep the node sets symmetric under direction
  // reversal, which is what makes beta(-l,-m) == conj(beta(l,m)) exact.
  if (effective_angular_nodes_q() % 2 != 0 ||
      effective_angular_nodes_omega() % 2 != 0)
    throw ConfigError("kernel: angular node counts must be even");
  if (angular.kind == AngularKernel::Kind::Tabulated && angular.table.size() < 2)
    throw ConfigError("kernel: tabulated angular kernel needs >= 2 samples");
  if (!(refinement_tolerance > 0.0))
    throw ConfigError("kernel: refinement_tolerance must be positive");
  if (refinement_fraction < 0.0 || refinement_fraction > 1.0)
    throw ConfigError("kernel: refinement_fraction must lie in [0, 1]");
}

std::array<std::uint8_t, 32> KernelConfig::content_hash() const {
  std::string bytes = "BKMCFG01";
  bytes += header_bytes(*this);
  for (double v : angular.table) put_f64(bytes, v);
  return sha256(bytes.data(), bytes.size());
}

std::size_t KernelTable::modes_per_field() const {
  return static_cast<std::size_t>(pow_int(2 * config.order + 1, config.dim));
}

Complex compute_mode(const KernelConfig& config, const int* l, const int* m) {
  config.validate();
  for (int a = 0; a < config.dim; ++a)
    if (std::abs(l[a]) > config.order || std::abs(m[a]) > config.order)
      throw ArgumentError("compute_mode: index outside {-N,...,N}^d");
  if (config.angular.separable()) {
    const SeparableContext ctx = make_separable_context(config, 1);
    return mode_separable(ctx, l, m);
  }
  const DirectContext ctx = make_direct_context(config, 1);
  return mode_direct(ctx, l, m);
}

Complex compute_mode(const KernelConfig& config, std::initializer_list<int> l,
                     std::initializer_list<int> m) {
  return compute_mode(config, l.begin(), m.begin());
}

Complex compute_beta_mode(const KernelConfig& config, const int* l, const int* m) {
  return compute_mode(config, l, m) -
         0.5 * (compute_mode(config, l, l) + compute_mode(config, m, m));
}

KernelTable build_table(const KernelConfig& config) {
  config.validate();

  KernelTable table;
  table.config = config;
  table.checksum = config.content_hash();

  const int side = 2 * config.order + 1;
  const std::size_t field = static_cast<std::size_t>(pow_int(side, config.dim));
  table.modes.assign(field * field, Complex(0.0, 0.0));

  std::vector<std::array<int, 3>> indices(field);
  for (std::size_t i = 0; i < field; ++i)
    decode_index(i, side, config.dim, config.order, indices[i].data());

  if (config.angular.separable()) {
    const SeparableTables tabs = make_separable_tables(config, 1);

    std::vector<Complex> diag(field);
#pragma omp parallel for schedule(static)
    for (long long m = 0; m < static_cast<long long>(field); ++m)
      diag[m] = mode_from_tables(tabs, indices[m].data(), indices[m].data());

#pragma omp parallel for schedule(dynamic, 8)
    for (long long l = 0; l < static_cast<long long>(field); ++l) {
      for (std::size_t m = 0; m < field; ++m) {
        const std::size_t pair = static_cast<std::size_t>(l) * field + m;
        const std::size_t mirror =
            (field - 1 - static_cast<std::size_t>(l)) * field + (field - 1 - m);
        if (pair > mirror) continue;
        if (static_cast<std::size_t>(l) == m) {
          table.modes[pair] = Complex(0.0, 0.0);
          table.modes[mirror] = Complex(0.0, 0.0);
          continue;
        }
        const Complex beta =
            mode_from_tables(tabs, indices[l].data(), indices[m].data()) -
            0.5 * (diag[l] + diag[m]);
        table.modes[pair] = beta;
        table.modes[mirror] = std::conj(beta);
      }
    }
  } else {
    const DirectContext ctx = make_direct_context(config, 1);

    std::vector<Complex> diag(field);
#pragma omp parallel for schedule(dynamic, 4)
    for (long long m = 0; m < static_cast<long long>(field); ++m)
      diag[m] = mode_direct(ctx, indices[m].data(), indices[m].data());

#pragma omp parallel for schedule(dynamic, 1)
    for (long long l = 0; l < static_cast<long long>(field); ++l) {
      for (std::size_t m = 0; m < field; ++m) {
        const std::size_t pair = static_cast<std::size_t>(l) * field + m;
        const std::size_t mirror =
            (field - 1 - static_cast<std::size_t>(l)) * field + (field - 1 - m);
        if (pair > mirror) continue;
        if (static_cast<std::size_t>(l) == m) {
          table.modes[pair] = Complex(0.0, 0.0);
          table.modes[mirror] = Complex(0.0, 0.0);
          continue;
        }
        const Complex beta =
            mode_direct(ctx, indices[l].data(), indices[m].data()) -
            0.5 * (diag[l] + diag[m]);
        table.modes[pair] = beta;
        table.modes[mirror] = std::conj(beta);
      }
    }
  }

  table.refinement = run_refinement(config, table.modes);
  if (table.refinement.max_discrepancy > config.refinement_tolerance) {
    std::ostringstream msg;
    msg << "kernel quadrature did not converge: node doubling moved mode (l=(";
    for (int a = 0; a < config.dim; ++a)
      msg << table.refinement.worst_l[a] << (a + 1 < config.dim ? "," : "");
    msg << "), m=(";
    for (int a = 0; a < config.dim; ++a)
      msg << table.refinement.worst_m[a] << (a + 1 < config.dim ? "," : "");
    msg << ")) by " << table.refinement.max_discrepancy << " (tolerance "
        << config.refinement_tolerance << ")";
    throw RefinementError(msg.str(), table.refinement.max_discrepancy);
  }
  return table;
}

void save_table(const KernelTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open kernel cache for writing: " + path.string());

  out.write(kMagic, sizeof(kMagic));

  std::string header = header_bytes(table.config);
  const auto cfg_hash = table.config.content_hash();
  header.append(reinterpret_cast<const char*>(cfg_hash.data()), cfg_hash.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string btab;
  for (double v : table.config.angular.table) put_f64(btab, v);
  out.write(btab.data(), static_cast<std::streamsize>(btab.size()));

  static_assert(sizeof(Complex) == 16, "complex<double> layout");
  const std::size_t payload_bytes = table.modes.size() * sizeof(Complex);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(table.modes.data()),
              static_cast<std::streamsize>(payload_bytes));
    const auto payload_hash = sha256(table.modes.data(), payload_bytes);
    out.write(reinterpret_cast<const char*>(payload_hash.data()),
              payload_hash.size());
  } else {
    std::string payload;
    payload.reserve(payload_bytes);
    for (const auto& c : table.modes) {
      put_f64(payload, c.real());
      put_f64(payload, c.imag());
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    const auto payload_hash = sha256(payload.data(), payload.size());
    out.write(reinterpret_cast<const char*>(payload_hash.data()),
              payload_hash.size());
  }
  if (!out) throw FormatError("short write to kernel cache: " + path.string());
}

KernelTable load_table(const std::filesystem::path& path,
                       const KernelConfig& expected) {
  expected.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open kernel cache: " + path.string());

  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("kernel cache has bad magic bytes: " + path.string());

  char header[76];
  if (!in.read(header, sizeof(header)))
    throw FormatError("kernel cache header truncated: " + path.string());

  KernelConfig stored = expected;
  stored.dim = static_cast<int>(get_u32(header + 0));
  stored.order = static_cast<int>(get_u32(header + 4));
  stored.vhs_exponent = get_f64(header + 8);
  stored.support_radius = get_f64(header + 16);
  stored.radial_nodes = static_cast<int>(get_u32(header + 24));
  stored.angular_nodes_q = static_cast<int>(get_u32(header + 28));
  stored.angular_nodes_omega = static_cast<int>(get_u32(header + 32));
  const auto kind = get_u32(header + 36);
  const auto btab_len = get_u32(header + 40);
  std::array<std::uint8_t, 32> stored_hash{};
  std::memcpy(stored_hash.data(), header + 44, 32);

  stored.angular.kind = static_cast<AngularKernel::Kind>(kind);
  stored.angular.table.assign(btab_len, 0.0);
  if (btab_len > 0) {
    std::vector<char> raw(static_cast<std::size_t>(btab_len) * 8);
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
      throw FormatError("kernel cache angular table truncated: " + path.string());
    for (std::uint32_t i = 0; i < btab_len; ++i)
      stored.angular.table[i] = get_f64(raw.data() + 8 * i);
  }

  const auto expected_hash = expected.content_hash();
  if (stored_hash != expected_hash ||
      stored.dim != expected.dim || stored.order != expected.order ||
      stored.vhs_exponent != expected.vhs_exponent ||
      stored.support_radius != expected.effective_support_radius() ||
      stored.radial_nodes != expected.effective_radial_nodes() ||
      stored.angular_nodes_q != expected.effective_angular_nodes_q() ||
      stored.angular_nodes_omega != expected.effective_angular_nodes_omega() ||
      stored.angular.kind != expected.angular.kind ||
      stored.angular.table != expected.angular.table)
    throw CacheInvalidError("kernel cache does not match the requested config: " +
                            path.string());

  KernelTable table;
  table.config = expected;
  table.checksum = expected_hash;

  const std::size_t field =
      static_cast<std::size_t>(pow_int(2 * expected.order + 1, expected.dim));
  table.modes.assign(field * field, Complex(0.0, 0.0));
  const std::size_t payload_bytes = table.modes.size() * sizeof(Complex);

  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(table.modes.data()),
                 static_cast<std::streamsize>(payload_bytes)))
      throw FormatError("kernel cache payload truncated: " + path.string());
    const auto payload_hash = sha256(table.modes.data(), payload_bytes);
    std::array<std::uint8_t, 32> trailer{};
    if (!in.read(reinterpret_cast<char*>(trailer.data()), trailer.size()))
      throw FormatError("kernel cache trailer truncated: " + path.string());
    if (trailer != payload_hash)
      throw FormatError("kernel cache payload hash mismatch: " + path.string());
  } else {
    std::vector<char> raw(payload_bytes);
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
      throw FormatError("kernel cache payload truncated: " + path.string());
    const auto payload_hash = sha256(raw.data(), raw.size());
    std::array<std::uint8_t, 32> trailer{};
    if (!in.read(reinterpret_cast<char*>(trailer.data()), trailer.size()))
      throw FormatError("kernel cache trailer truncated: " + path.string());
    if (trailer != payload_hash)
      throw FormatError("kernel cache payload hash mismatch: " + path.string());
    for (std::size_t i = 0; i < table.modes.size(); ++i)
      table.modes[i] = Complex(get_f64(raw.data() + 16 * i),
                               get_f64(raw.data() + 16 * i + 8));
  }
  return table;
}

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t size) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_Digest(data, size, out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

std::string hex_digest(const std::array<std::uint8_t, 32>& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

}  // namespace boltzmann
