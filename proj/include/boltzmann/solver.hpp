#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "boltzmann/equilibrium.hpp"
#include "boltzmann/field.hpp"
#include "boltzmann/kernel.hpp"

namespace boltzmann {

enum class Scheme { EquilibriumPreserving, Classical };

struct SolverConfig {
  Scheme scheme = Scheme::EquilibriumPreserving;
  double dt = 0.05;
  double t_end = 1.0;
  int record_every = 1;
  bool record_entropy = true;
  /// Moments used to build the fixed Maxwellian M_N. When the initial
  /// condition's moments are known analytically, passing them here makes
  /// f0 == M_N a bit-exact fixed point; otherwise they are measured from f0.
  std::optional<Moments> equilibrium_moments;
};

struct DiagnosticsRecord {
  double t = 0.0;
  Moments moments;
  double g_norm_l1 = 0.0;    // grid-quadrature L1 of g = f - M_N
  double g_norm_l2 = 0.0;    // Parseval L2
  double g_norm_linf = 0.0;  // grid max
  Complex f0_coeff{0.0, 0.0};
  std::optional<double> entropy;
  double min_grid_value = 0.0;
};

struct FitResult {
  double decay_c = 0.0;
  double decay_rate = 0.0;
  double r_squared = 0.0;
};

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  SpectralField final_field;
  SpectralField equilibrium_field;  // the fixed M_N
  int steps = 0;
  double max_g_coeff_inf = 0.0;    // max over every step of max_k |f_k - M_k|
  double max_mass_drift = 0.0;     // max over every step of |f_0(t) - f_0(0)|
  double max_momentum_drift = 0.0; // vs t=0, from recorded grid moments
  double max_energy_drift = 0.0;
  double preflight_dt_ceiling = 0.0;
  double runtime_seconds = 0.0;
};

using Rhs = std::function<SpectralField(const SpectralField&)>;
/// Called at every record point with the fresh diagnostics row and the
/// current state; lets callers keep partial output when a run blows up.
using RecordObserver =
    std::function<void(const DiagnosticsRecord&, const SpectralField&)>;

/// Classical fourth-order Runge-Kutta update. Throws BlowUpError when a
/// stage turns non-finite, tagged with the step's start time.
SpectralField step_rk4(const SpectralField& f, const Rhs& rhs, double dt,
                       double t_now = 0.0);

/// Integrates f0 to t_end with fixed dt. For the equilibrium-preserving
/// scheme M_N is built once from the initial moments and held fixed; the
/// classical scheme uses the same M_N for comparable diagnostics. The
/// reported dt ceiling is a conservative Lipschitz estimate
/// 0.5 / (2 * max|beta| * sum|f0_k|); exceeding it is reported, not fatal.
RunResult run(const SpectralField& f0, const KernelTable& table,
              const VelocityGrid& grid, const SolverConfig& config,
              const RecordObserver& observer = {});

/// Least-squares fit of log(g_norm_l1) vs t over records in [t_a, t_b]
/// with g_norm_l1 > 1e-14. Requires at least 10 usable records.
FitResult fit_decay(const std::vector<DiagnosticsRecord>& records, double t_a,
                    double t_b);

}  // namespace boltzmann
