#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "boltzmann/bkw.hpp"
#include "boltzmann/equilibrium.hpp"
#include "boltzmann/kernel.hpp"
#include "boltzmann/solver.hpp"

namespace boltzmann::cli {

// exit codes
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;
inline constexpr int kAssertionError = 4;

struct InitialCondition {
  enum class Type { Maxwellian, Bkw, TwoMaxwellians, CoefficientsFile };
  Type type = Type::Maxwellian;
  Moments maxwellian;                          // Maxwellian
  double bkw_temperature = bkw::kDefaultTemperature;
  double bkw_time = 0.0;
  std::vector<Moments> components;             // TwoMaxwellians
  std::filesystem::path coefficients_path;     // CoefficientsFile
};

struct ExperimentConfig {
  std::optional<std::pair<double, double>> fit_window;  // default: last 90%
  std::vector<int> orders;                              // convergence ladder
  int reference_order = 0;
  double terminal_time = 1.0;
  double consistency_time = 1.0;
  double sobolev_r = 0.0;
  bool oracle_check = true;
  std::string assertions_json;  // raw object, evaluated per command
};

struct CliConfig {
  KernelConfig kernel;
  InitialCondition initial_condition;
  SolverConfig solver;
  ExperimentConfig experiment;
};

/// Parses and validates the sectioned JSON config. Throws ConfigError.
CliConfig parse_config(const std::filesystem::path& path);

struct InitialState {
  SpectralField field;
  /// Analytic moments when the descriptor determines them (maxwellian,
  /// bkw, two_maxwellians); measured otherwise.
  std::optional<Moments> declared_moments;
};

InitialState make_initial_state(const InitialCondition& ic,
                                const VelocityGrid& grid, int order);

/// Cache directory: BOLTZSPEC_CACHE_DIR or ./kernel-cache.
std::filesystem::path cache_directory();
std::filesystem::path cache_path_for(const KernelConfig& config);

/// Loads the cached table if it matches, otherwise builds and saves it.
KernelTable load_or_build_table(const KernelConfig& config);

int cmd_build_kernel(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_path);
int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& out_base);
int cmd_convergence(const std::filesystem::path& config_path,
                    const std::filesystem::path& out_base);

/// Full argument dispatch; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace boltzmann::cli
