#include "boltzmann/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "boltzmann/collision.hpp"
#include "boltzmann/errors.hpp"

namespace boltzmann {

namespace {

SpectralField call_rhs(const Rhs& rhs, const SpectralField& f, double t_now) {
  try {
    SpectralField out = rhs(f);
    if (!all_finite(out))
      throw BlowUpError("time integration blew up at t=" + std::to_string(t_now),
                        t_now);
    return out;
  } catch (const OverflowError&) {
    throw BlowUpError("time integration blew up at t=" + std::to_string(t_now),
                      t_now);
  }
}

DiagnosticsRecord make_record(double t, const SpectralField& f,
                              const SpectralField& equilibrium,
                              const VelocityGrid& grid, bool record_entropy) {
  DiagnosticsRecord rec;
  rec.t = t;
  rec.moments = moments(f, grid);
  rec.f0_coeff = f.coeffs[f.linear_index(std::vector<int>(f.dim, 0).data())];

  const SpectralField g = f - equilibrium;
  const auto g_values = evaluate(g, grid);
  const double w = std::pow(grid.spacing(), f.dim);
  double l1 = 0.0, linf = 0.0;
  for (double v : g_values) {
    l1 += std::abs(v);
    linf = std::max(linf, std::abs(v));
  }
  rec.g_norm_l1 = w * l1;
  rec.g_norm_linf = linf;
  rec.g_norm_l2 = norm(g, NormKind::L2);

  const auto f_values = evaluate(f, grid);
  rec.min_grid_value = *std::min_element(f_values.begin(), f_values.end());
  if (record_entropy) {
    double s = 0.0;
    for (double v : f_values) s += v * std::log(std::max(v, 1e-30));
    rec.entropy = w * s;
  }
  return rec;
}

double energy_of(const Moments& m, int dim) {
  double u2 = 0.0;
  for (int a = 0; a < dim; ++a) u2 += m.u[a] * m.u[a];
  return m.rho * (dim * m.temperature + u2);
}

}  // namespace

SpectralField step_rk4(const SpectralField& f, const Rhs& rhs, double dt,
                       double t_now) {
  const SpectralField k1 = call_rhs(rhs, f, t_now);

  SpectralField stage = f;
  axpy(dt / 2.0, k1, stage);
  const SpectralField k2 = call_rhs(rhs, stage, t_now);

  stage = f;
  axpy(dt / 2.0, k2, stage);
  const SpectralField k3 = call_rhs(rhs, stage, t_now);

  stage = f;
  axpy(dt, k3, stage);
  const SpectralField k4 = call_rhs(rhs, stage, t_now);

  SpectralField out = f;
  axpy(dt / 6.0, k1, out);
  axpy(dt / 3.0, k2, out);
  axpy(dt / 3.0, k3, out);
  axpy(dt / 6.0, k4, out);
  if (!all_finite(out))
    throw BlowUpError("time integration blew up at t=" + std::to_string(t_now),
                      t_now);
  return out;
}

RunResult run(const SpectralField& f0, const KernelTable& table,
              const VelocityGrid& grid, const SolverConfig& config,
              const RecordObserver& observer) {
  if (!(config.dt > 0.0)) throw ConfigError("solver: dt must be positive");
  if (config.t_end < config.dt) throw ConfigError("solver: t_end must be >= dt");
  if (config.record_every < 1)
    throw ConfigError("solver: record_every must be >= 1");
  if (f0.dim != table.config.dim || f0.order != table.config.order)
    throw ArgumentError("solver: field does not match kernel table");
  if (grid.dim != f0.dim || grid.points_per_axis < 2 * f0.order + 2)
    throw ConfigError("solver: grid too coarse for the field order");

  const auto wall_start = std::chrono::steady_clock::now();

  const Moments m0 = config.equilibrium_moments ? *config.equilibrium_moments
                                                : moments(f0, grid);
  RunResult result;
  result.equilibrium_field = maxwellian(m0, grid, f0.order);

  double max_beta = 0.0;
  for (const auto& c : table.modes) max_beta = std::max(max_beta, std::abs(c));
  double l1_coeff = 0.0;
  for (const auto& c : f0.coeffs) l1_coeff += std::abs(c);
  result.preflight_dt_ceiling =
      max_beta * l1_coeff > 0.0 ? 0.5 / (2.0 * max_beta * l1_coeff) : 0.0;

  const SpectralField& equilibrium = result.equilibrium_field;
  Rhs rhs;
  if (config.scheme == Scheme::EquilibriumPreserving) {
    rhs = [&table, &equilibrium](const SpectralField& f) {
      return ep_rhs(f, equilibrium, table);
    };
  } else {
    rhs = [&table](const SpectralField& f) { return q_quadratic(f, f, table); };
  }

  const long long n_steps =
      std::max<long long>(1, std::llround(config.t_end / config.dt));

  SpectralField f = f0;
  const Complex mass0 = f0.coeffs[f0.linear_index(std::vector<int>(f0.dim, 0).data())];

  result.records.push_back(make_record(0.0, f, equilibrium, grid,
                                       config.record_entropy));
  if (observer) observer(result.records.back(), f);
  const Moments first = result.records.front().moments;
  const double energy0 = energy_of(first, f0.dim);

  auto track_step = [&](const SpectralField& fi) {
    const SpectralField g = fi - equilibrium;
    result.max_g_coeff_inf = std::max(result.max_g_coeff_inf, coeff_linf(g));
    const Complex mass =
        fi.coeffs[fi.linear_index(std::vector<int>(fi.dim, 0).data())];
    result.max_mass_drift =
        std::max(result.max_mass_drift, std::abs(mass - mass0));
  };
  track_step(f);

  for (long long i = 1; i <= n_steps; ++i) {
    const double t_prev = (i - 1) * config.dt;
    f = step_rk4(f, rhs, config.dt, t_prev);
    track_step(f);

    if (i % config.record_every == 0 || i == n_steps) {
      const double t = i * config.dt;
      result.records.push_back(make_record(t, f, equilibrium, grid,
                                           config.record_entropy));
      if (observer) observer(result.records.back(), f);
      const Moments& m = result.records.back().moments;
      double dmom = 0.0;
      for (int a = 0; a < f.dim; ++a) {
        const double d = m.rho * m.u[a] - first.rho * first.u[a];
        dmom += d * d;
      }
      result.max_momentum_drift =
          std::max(result.max_momentum_drift, std::sqrt(dmom));
      result.max_energy_drift = std::max(
          result.max_energy_drift, std::abs(energy_of(m, f.dim) - energy0));
    }
  }

  result.final_field = std::move(f);
  result.steps = static_cast<int>(n_steps);
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

FitResult fit_decay(const std::vector<DiagnosticsRecord>& records, double t_a,
                    double t_b) {
  std::vector<double> ts, ys;
  for (const auto& rec : records) {
    if (rec.t < t_a || rec.t > t_b) continue;
    if (!(rec.g_norm_l1 > 1e-14)) continue;
    ts.push_back(rec.t);
    ys.push_back(std::log(rec.g_norm_l1));
  }
  if (ts.size() < 10)
    throw ArgumentError("fit_decay: need at least 10 usable records in window");

  const double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double tbar = st / n, ybar = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dt = ts[i] - tbar, dy = ys[i] - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  const double slope = sty / stt;
  const double intercept = ybar - slope * tbar;

  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (intercept + slope * ts[i]);
    ss_res += r * r;
  }

  FitResult fit;
  fit.decay_c = std::exp(intercept);
  fit.decay_rate = -slope;
  // variance at the rounding floor of the log values means a perfect fit
  const double floor = 1e-24 * n * std::max(1.0, ybar * ybar);
  fit.r_squared = syy > floor ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace boltzmann
