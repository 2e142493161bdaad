#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "boltzmann/collision.hpp"
#include "boltzmann/errors.hpp"
#include "json.hpp"

namespace boltzmann::cli {

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
}

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("config: missing or non-numeric field '" + key + "'");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError("config: field '" + key + "' must be an integer");
  return j[key].get<int>();
}

double get_number(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError("config: field '" + key + "' must be a number");
  return j[key].get<double>();
}

Moments parse_moments(const json& j, int dim) {
  Moments m;
  m.rho = require_number(j, "rho");
  m.temperature = require_number(j, "temperature");
  if (!(m.rho > 0.0) || !(m.temperature > 0.0))
    throw ConfigError("config: initial condition needs rho > 0 and temperature > 0");
  if (j.contains("u")) {
    if (!j["u"].is_array() || j["u"].size() != static_cast<std::size_t>(dim))
      throw ConfigError("config: 'u' must be an array of length dim");
    for (int a = 0; a < dim; ++a) m.u[a] = j["u"][a].get<double>();
  }
  return m;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json moments_to_json(const Moments& m, int dim) {
  json u = json::array();
  for (int a = 0; a < dim; ++a) u.push_back(m.u[a]);
  return json{{"rho", m.rho}, {"u", u}, {"temperature", m.temperature}};
}

// ---------------------------------------------------------------------------
// Assertions: every configured key is checked against a computed value and
// echoed in the summary; unknown keys are config errors.

struct AssertionOutcome {
  json report = json::object();
  bool all_passed = true;

  void check(const std::string& name, double value, double threshold, bool pass) {
    report[name] = {{"value", value}, {"threshold", threshold}, {"pass", pass}};
    all_passed = all_passed && pass;
  }
  void check_flag(const std::string& name, bool value, bool expected) {
    report[name] = {{"value", value}, {"expected", expected},
                    {"pass", value == expected}};
    all_passed = all_passed && (value == expected);
  }
};

json parse_assertions(const std::string& raw) {
  if (raw.empty()) return json::object();
  return json::parse(raw);
}

// ---------------------------------------------------------------------------

void write_csv_header(std::ostream& out, int dim) {
  out << "t,rho,ux,uy";
  if (dim == 3) out << ",uz";
  out << ",T,g_L1,g_L2,g_Linf,f0_re,f0_im,entropy,min_grid_value\n";
}

void write_csv_row(std::ostream& out, const DiagnosticsRecord& rec, int dim) {
  out << format_double(rec.t) << ',' << format_double(rec.moments.rho);
  for (int a = 0; a < dim; ++a) out << ',' << format_double(rec.moments.u[a]);
  out << ',' << format_double(rec.moments.temperature) << ','
      << format_double(rec.g_norm_l1) << ',' << format_double(rec.g_norm_l2)
      << ',' << format_double(rec.g_norm_linf) << ','
      << format_double(rec.f0_coeff.real()) << ','
      << format_double(rec.f0_coeff.imag()) << ','
      << (rec.entropy ? format_double(*rec.entropy) : std::string()) << ','
      << format_double(rec.min_grid_value) << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file: " + path.string());
  out << text;
}

constexpr const char* kNormsNote =
    "g_L1 and g_Linf are trapezoid-grid approximations of the continuum "
    "norms; g_L2 is spectral (Parseval). CSV values are full-precision "
    "round-trip doubles.";

}  // namespace

// ---------------------------------------------------------------------------

CliConfig parse_config(const std::filesystem::path& path) {
  const json root = load_json(path);
  CliConfig cfg;

  if (!root.contains("kernel") || !root["kernel"].is_object())
    throw ConfigError("config: missing 'kernel' section");
  const json& k = root["kernel"];
  cfg.kernel.dim = get_int(k, "dim", 2);
  cfg.kernel.order = get_int(k, "order", 8);
  cfg.kernel.vhs_exponent = get_number(k, "vhs_exponent", 0.0);
  cfg.kernel.support_radius = get_number(k, "support_radius", 0.0);
  cfg.kernel.radial_nodes = get_int(k, "radial_nodes", 0);
  cfg.kernel.angular_nodes_q = get_int(k, "angular_nodes_q", 0);
  cfg.kernel.angular_nodes_omega = get_int(k, "angular_nodes_omega", 0);
  cfg.kernel.refinement_tolerance = get_number(k, "refinement_tolerance", 1e-8);
  cfg.kernel.refinement_fraction = get_number(k, "refinement_fraction", 0.01);
  if (k.contains("angular_kernel")) {
    const json& ak = k["angular_kernel"];
    if (ak.is_string() && ak.get<std::string>() == "isotropic") {
      cfg.kernel.angular.kind = AngularKernel::Kind::IsotropicNormalized;
    } else if (ak.is_object() && ak.contains("tabulated") &&
               ak["tabulated"].is_array()) {
      cfg.kernel.angular.kind = AngularKernel::Kind::Tabulated;
      for (const auto& v : ak["tabulated"])
        cfg.kernel.angular.table.push_back(v.get<double>());
    } else {
      throw ConfigError(
          "config: angular_kernel must be \"isotropic\" or {\"tabulated\": [...]}");
    }
  }
  cfg.kernel.validate();

  if (!root.contains("initial_condition") || !root["initial_condition"].is_object())
    throw ConfigError("config: missing 'initial_condition' section");
  const json& ic = root["initial_condition"];
  const std::string type = ic.value("type", "");
  if (type == "maxwellian") {
    cfg.initial_condition.type = InitialCondition::Type::Maxwellian;
    cfg.initial_condition.maxwellian = parse_moments(ic, cfg.kernel.dim);
  } else if (type == "bkw") {
    if (cfg.kernel.dim != 2)
      throw ConfigError("config: the bkw initial condition is 2-d only");
    cfg.initial_condition.type = InitialCondition::Type::Bkw;
    cfg.initial_condition.bkw_temperature =
        get_number(ic, "temperature", bkw::kDefaultTemperature);
    cfg.initial_condition.bkw_time = get_number(ic, "time", 0.0);
    if (!(cfg.initial_condition.bkw_temperature > 0.0))
      throw ConfigError("config: bkw temperature must be positive");
  } else if (type == "two_maxwellians") {
    cfg.initial_condition.type = InitialCondition::Type::TwoMaxwellians;
    if (!ic.contains("components") || !ic["components"].is_array() ||
        ic["components"].size() != 2)
      throw ConfigError("config: two_maxwellians needs exactly 2 components");
    for (const auto& c : ic["components"])
      cfg.initial_condition.components.push_back(parse_moments(c, cfg.kernel.dim));
  } else if (type == "coefficients_file") {
    cfg.initial_condition.type = InitialCondition::Type::CoefficientsFile;
    if (!ic.contains("path"))
      throw ConfigError("config: coefficients_file needs 'path'");
    std::filesystem::path p = ic["path"].get<std::string>();
    if (p.is_relative()) p = path.parent_path() / p;
    cfg.initial_condition.coefficients_path = p;
  } else {
    throw ConfigError(
        "config: initial_condition.type must be one of maxwellian, bkw, "
        "two_maxwellians, coefficients_file");
  }

  if (!root.contains("solver") || !root["solver"].is_object())
    throw ConfigError("config: missing 'solver' section");
  const json& s = root["solver"];
  const std::string scheme = s.value("scheme", "equilibrium_preserving");
  if (scheme == "equilibrium_preserving")
    cfg.solver.scheme = Scheme::EquilibriumPreserving;
  else if (scheme == "classical")
    cfg.solver.scheme = Scheme::Classical;
  else
    throw ConfigError(
        "config: scheme must be equilibrium_preserving or classical");
  cfg.solver.dt = require_number(s, "dt");
  cfg.solver.t_end = require_number(s, "t_end");
  cfg.solver.record_every = get_int(s, "record_every", 1);
  if (s.contains("record_entropy"))
    cfg.solver.record_entropy = s["record_entropy"].get<bool>();
  if (!(cfg.solver.dt > 0.0)) throw ConfigError("config: dt must be positive");
  if (cfg.solver.t_end < cfg.solver.dt)
    throw ConfigError("config: t_end must be >= dt");
  if (cfg.solver.record_every < 1)
    throw ConfigError("config: record_every must be >= 1");

  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    if (e.contains("fit_window")) {
      if (!e["fit_window"].is_array() || e["fit_window"].size() != 2)
        throw ConfigError("config: fit_window must be [t_a, t_b]");
      cfg.experiment.fit_window = {e["fit_window"][0].get<double>(),
                                   e["fit_window"][1].get<double>()};
    }
    if (e.contains("orders")) {
      for (const auto& o : e["orders"])
        cfg.experiment.orders.push_back(o.get<int>());
    }
    cfg.experiment.reference_order = get_int(e, "reference_order", 0);
    cfg.experiment.terminal_time = get_number(e, "time", 1.0);
    cfg.experiment.consistency_time =
        get_number(e, "consistency_time", cfg.experiment.terminal_time);
    cfg.experiment.sobolev_r = get_number(e, "sobolev_r", 0.0);
    if (e.contains("oracle_check"))
      cfg.experiment.oracle_check = e["oracle_check"].get<bool>();
    if (e.contains("assertions")) {
      if (!e["assertions"].is_object())
        throw ConfigError("config: assertions must be an object");
      cfg.experiment.assertions_json = e["assertions"].dump();
    }
  }
  return cfg;
}

InitialState make_initial_state(const InitialCondition& ic,
                                const VelocityGrid& grid, int order) {
  InitialState state;
  switch (ic.type) {
    case InitialCondition::Type::Maxwellian: {
      state.field = maxwellian(ic.maxwellian, grid, order);
      state.declared_moments = ic.maxwellian;
      return state;
    }
    case InitialCondition::Type::Bkw: {
      state.field = bkw::field(grid, order, ic.bkw_time, ic.bkw_temperature);
      Moments m;
      m.rho = 1.0;
      m.temperature = ic.bkw_temperature;
      state.declared_moments = m;
      return state;
    }
    case InitialCondition::Type::TwoMaxwellians: {
      state.field = maxwellian(ic.components[0], grid, order) +
                    maxwellian(ic.components[1], grid, order);
      Moments m;
      m.rho = ic.components[0].rho + ic.components[1].rho;
      for (int a = 0; a < grid.dim; ++a) {
        m.u[a] = (ic.components[0].rho * ic.components[0].u[a] +
                  ic.components[1].rho * ic.components[1].u[a]) /
                 m.rho;
      }
      double energy = 0.0;
      for (const auto& c : ic.components) {
        double du2 = 0.0;
        for (int a = 0; a < grid.dim; ++a) {
          const double d = c.u[a] - m.u[a];
          du2 += d * d;
        }
        energy += c.rho * (grid.dim * c.temperature + du2);
      }
      m.temperature = energy / (grid.dim * m.rho);
      state.declared_moments = m;
      return state;
    }
    case InitialCondition::Type::CoefficientsFile: {
      const json file = load_json(ic.coefficients_path);
      const int dim = get_int(file, "dim", 0);
      const int file_order = get_int(file, "order", 0);
      if (dim != grid.dim || file_order != order)
        throw ConfigError("coefficients file dim/order do not match the kernel");
      SpectralField f(dim, order);
      if (!file.contains("coeffs") || !file["coeffs"].is_array() ||
          file["coeffs"].size() != f.size())
        throw ConfigError("coefficients file has the wrong number of entries");
      for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& c = file["coeffs"][i];
        if (!c.is_array() || c.size() != 2)
          throw ConfigError("coefficients file entries must be [re, im] pairs");
        f.coeffs[i] = Complex(c[0].get<double>(), c[1].get<double>());
      }
      if (!all_finite(f))
        throw ConfigError("coefficients file contains non-finite values");
      const double scale = std::max(1.0, coeff_linf(f));
      if (conjugate_symmetry_defect(f) > 1e-9 * scale)
        throw ConfigError(
            "coefficients file is not conjugate-symmetric (non-real density)");
      state.field = std::move(f);
      return state;
    }
  }
  throw ConfigError("unknown initial condition type");
}

std::filesystem::path cache_directory() {
  if (const char* env = std::getenv("BOLTZSPEC_CACHE_DIR"); env && *env)
    return env;
  return "kernel-cache";
}

std::filesystem::path cache_path_for(const KernelConfig& config) {
  const std::string digest = hex_digest(config.content_hash()).substr(0, 12);
  std::ostringstream name;
  name << "kernel-d" << config.dim << "-N" << config.order << "-" << digest
       << ".bkm";
  return cache_directory() / name.str();
}

KernelTable load_or_build_table(const KernelConfig& config) {
  const auto path = cache_path_for(config);
  if (std::filesystem::exists(path)) {
    try {
      return load_table(path, config);
    } catch (const Error& e) {
      std::cerr << "kernel cache rejected (" << e.what() << "), rebuilding\n";
    }
  }
  KernelTable table = build_table(config);
  std::filesystem::create_directories(path.parent_path());
  save_table(table, path);
  return table;
}

// ---------------------------------------------------------------------------

int cmd_build_kernel(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_path) {
  const CliConfig cfg = parse_config(config_path);
  const KernelTable table = build_table(cfg.kernel);
  if (out_path.has_parent_path())
    std::filesystem::create_directories(out_path.parent_path());
  save_table(table, out_path);

  const std::size_t payload_bytes = table.modes.size() * sizeof(Complex);
  const auto payload_hash = sha256(table.modes.data(), payload_bytes);

  json out;
  out["command"] = "build-kernel";
  out["cache_path"] = out_path.string();
  out["bytes"] = std::filesystem::file_size(out_path);
  out["config_sha256"] = hex_digest(table.checksum);
  out["payload_sha256"] = hex_digest(payload_hash);
  out["refinement"] = {
      {"max_discrepancy", table.refinement.max_discrepancy},
      {"samples", table.refinement.samples},
      {"worst_l", std::vector<int>(table.refinement.worst_l.begin(),
                                   table.refinement.worst_l.begin() + cfg.kernel.dim)},
      {"worst_m", std::vector<int>(table.refinement.worst_m.begin(),
                                   table.refinement.worst_m.begin() + cfg.kernel.dim)}};
  out["nodes"] = {{"radial", cfg.kernel.effective_radial_nodes()},
                  {"angular_q", cfg.kernel.effective_angular_nodes_q()},
                  {"angular_omega", cfg.kernel.effective_angular_nodes_omega()}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& out_base) {
  const CliConfig cfg = parse_config(config_path);
  const KernelTable table = load_or_build_table(cfg.kernel);
  const auto grid = VelocityGrid::for_order(cfg.kernel.dim, cfg.kernel.order);

  InitialState init = make_initial_state(cfg.initial_condition, grid,
                                         cfg.kernel.order);
  SolverConfig solver_config = cfg.solver;
  solver_config.equilibrium_moments = init.declared_moments;

  std::filesystem::path csv_path = out_base;
  csv_path += ".csv";
  std::filesystem::path json_path = out_base;
  json_path += ".json";
  if (out_base.has_parent_path())
    std::filesystem::create_directories(out_base.parent_path());

  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw ConfigError("cannot open output file: " + csv_path.string());
  write_csv_header(csv, cfg.kernel.dim);

  json out;
  out["command"] = "run";
  out["scheme"] = cfg.solver.scheme == Scheme::EquilibriumPreserving
                      ? "equilibrium_preserving"
                      : "classical";
  out["dim"] = cfg.kernel.dim;
  out["order"] = cfg.kernel.order;
  out["dt"] = cfg.solver.dt;
  out["t_end"] = cfg.solver.t_end;
  out["record_every"] = cfg.solver.record_every;
  out["kernel_config_sha256"] = hex_digest(table.checksum);
  out["norms_note"] = kNormsNote;

  bool truncated = false;
  std::vector<DiagnosticsRecord> records;
  RunResult result;
  try {
    result = run(init.field, table, grid, solver_config,
                 [&](const DiagnosticsRecord& rec, const SpectralField&) {
                   records.push_back(rec);
                   write_csv_row(csv, rec, cfg.kernel.dim);
                 });
  } catch (const BlowUpError& e) {
    csv << "# truncated: blow-up at t=" << format_double(e.time) << "\n";
    csv.flush();
    out["truncated"] = true;
    out["blow_up_time"] = e.time;
    write_text_file(json_path, out.dump(2) + "\n");
    std::cerr << "run blew up at t=" << e.time << "\n";
    return kNumericalError;
  }
  csv.flush();

  out["truncated"] = truncated;
  out["blow_up_time"] = nullptr;
  out["steps"] = result.steps;
  out["runtime_seconds"] = result.runtime_seconds;
  out["initial_moments"] =
      moments_to_json(result.records.front().moments, cfg.kernel.dim);
  out["final_moments"] =
      moments_to_json(result.records.back().moments, cfg.kernel.dim);
  if (init.declared_moments)
    out["equilibrium_moments"] =
        moments_to_json(*init.declared_moments, cfg.kernel.dim);

  const double g_first = result.records.front().g_norm_l1;
  const double g_last = result.records.back().g_norm_l1;
  double g_max = 0.0;
  for (const auto& rec : result.records) g_max = std::max(g_max, rec.g_norm_l1);
  out["g_l1_first"] = g_first;
  out["g_l1_last"] = g_last;
  out["g_l1_max"] = g_max;
  out["max_g_coeff_inf"] = result.max_g_coeff_inf;
  out["mass_drift_max"] = result.max_mass_drift;
  out["momentum_drift_max"] = result.max_momentum_drift;
  out["energy_drift_max"] = result.max_energy_drift;
  out["preflight_dt_ceiling"] = result.preflight_dt_ceiling;
  out["dt_exceeds_ceiling"] = cfg.solver.dt > result.preflight_dt_ceiling;
  if (cfg.solver.dt > result.preflight_dt_ceiling)
    std::cerr << "note: dt=" << cfg.solver.dt
              << " exceeds the conservative preflight ceiling "
              << result.preflight_dt_ceiling
              << " (blow-up detection remains active)\n";
  if (result.records.back().entropy)
    out["entropy_last"] = *result.records.back().entropy;
  out["min_grid_value_last"] = result.records.back().min_grid_value;

  const double window_a =
      cfg.experiment.fit_window ? cfg.experiment.fit_window->first
                                : 0.1 * cfg.solver.t_end;
  const double window_b =
      cfg.experiment.fit_window ? cfg.experiment.fit_window->second
                                : cfg.solver.t_end;
  std::optional<FitResult> fit;
  try {
    fit = fit_decay(result.records, window_a, window_b);
  } catch (const ArgumentError&) {
    fit.reset();
  }
  if (fit) {
    out["decay_fit"] = {{"C", fit->decay_c},
                        {"rate", fit->decay_rate},
                        {"r_squared", fit->r_squared},
                        {"window", {window_a, window_b}}};
  } else {
    out["decay_fit"] = nullptr;
  }

  AssertionOutcome outcome;
  const json asserts = parse_assertions(cfg.experiment.assertions_json);
  for (const auto& [name, threshold] : asserts.items()) {
    if (name == "g_l1_max_below")
      outcome.check(name, g_max, threshold, g_max < threshold.get<double>());
    else if (name == "g_coeff_inf_max_below")
      outcome.check(name, result.max_g_coeff_inf, threshold,
                    result.max_g_coeff_inf < threshold.get<double>());
    else if (name == "mass_drift_below")
      outcome.check(name, result.max_mass_drift, threshold,
                    result.max_mass_drift < threshold.get<double>());
    else if (name == "terminal_g_l1_below")
      outcome.check(name, g_last, threshold, g_last < threshold.get<double>());
    else if (name == "terminal_ratio_below")
      outcome.check(name, g_last / g_first, threshold,
                    g_last / g_first < threshold.get<double>());
    else if (name == "decay_rate_above")
      outcome.check(name, fit ? fit->decay_rate : 0.0, threshold,
                    fit && fit->decay_rate > threshold.get<double>());
    else if (name == "r_squared_above")
      outcome.check(name, fit ? fit->r_squared : 0.0, threshold,
                    fit && fit->r_squared > threshold.get<double>());
    else
      throw ConfigError("config: unknown run assertion '" + name + "'");
  }
  out["assertions"] = outcome.report;
  out["assertions_passed"] = outcome.all_passed;

  write_text_file(json_path, out.dump(2) + "\n");
  return outcome.all_passed ? kOk : kAssertionError;
}

int cmd_convergence(const std::filesystem::path& config_path,
                    const std::filesystem::path& out_base) {
  const CliConfig cfg = parse_config(config_path);
  const auto& exp = cfg.experiment;
  if (exp.orders.size() < 2)
    throw ConfigError("config: convergence needs an order ladder of length >= 2");
  if (!std::is_sorted(exp.orders.begin(), exp.orders.end()) ||
      std::adjacent_find(exp.orders.begin(), exp.orders.end()) !=
          exp.orders.end())
    throw ConfigError("config: convergence orders must be strictly increasing");
  const int max_order = exp.orders.back();
  if (exp.reference_order < 2 * max_order)
    throw ConfigError(
        "config: reference_order must be at least twice the largest order");

  const bool is_bkw =
      cfg.initial_condition.type == InitialCondition::Type::Bkw;

  // reference order
  KernelConfig ref_kernel = cfg.kernel;
  ref_kernel.order = exp.reference_order;
  const KernelTable table_ref = load_or_build_table(ref_kernel);
  const auto grid_ref =
      VelocityGrid::for_order(cfg.kernel.dim, exp.reference_order);

  SolverConfig run_config = cfg.solver;
  run_config.t_end = exp.terminal_time;
  run_config.record_entropy = false;
  run_config.record_every =
      std::max<int>(1, static_cast<int>(std::llround(exp.terminal_time /
                                                     cfg.solver.dt)));

  InitialState init_ref =
      make_initial_state(cfg.initial_condition, grid_ref, exp.reference_order);
  run_config.equilibrium_moments = init_ref.declared_moments;
  const RunResult ref_run =
      run(init_ref.field, table_ref, grid_ref, run_config);

  struct Row {
    int order = 0;
    double consistency_error = 0.0;
    double terminal_error_vs_ref = 0.0;
    std::optional<double> terminal_error_vs_analytic;
  };
  std::vector<Row> rows;

  for (int order : exp.orders) {
    KernelConfig kcfg = cfg.kernel;
    kcfg.order = order;
    const KernelTable table_n = load_or_build_table(kcfg);
    const auto grid_n = VelocityGrid::for_order(cfg.kernel.dim, order);

    InitialState init_n =
        make_initial_state(cfg.initial_condition, grid_n, order);
    run_config.equilibrium_moments = init_n.declared_moments;
    const RunResult run_n = run(init_n.field, table_n, grid_n, run_config);

    Row row;
    row.order = order;
    row.terminal_error_vs_ref =
        norm(pad(run_n.final_field, exp.reference_order) - ref_run.final_field,
             NormKind::L2);

    // consistency of the projected right-hand side against the reference
    // operator, evaluated at a smooth state of the flow
    SpectralField state =
        is_bkw ? bkw::field(grid_n, order, exp.consistency_time,
                            cfg.initial_condition.bkw_temperature)
               : init_n.field;
    const Moments m = init_n.declared_moments ? *init_n.declared_moments
                                              : moments(state, grid_n);
    const SpectralField equilibrium = maxwellian(m, grid_n, order);
    row.consistency_error = perturbation_norm(state, equilibrium, table_n,
                                              table_ref, exp.sobolev_r);

    if (is_bkw) {
      const SpectralField exact =
          bkw::field(grid_n, order, exp.terminal_time,
                     cfg.initial_condition.bkw_temperature);
      row.terminal_error_vs_analytic =
          norm(run_n.final_field - exact, NormKind::L2);
    }
    rows.push_back(row);
  }

  // successive error ratios; spectral accuracy shows as ratios that are
  // greater than one and increasing along the ladder
  auto ratios = [](auto&& get) {
    return [get](const std::vector<Row>& rows) {
      std::vector<double> r;
      for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        r.push_back(get(rows[i]) / get(rows[i + 1]));
      return r;
    };
  };
  const auto consistency_ratios =
      ratios([](const Row& r) { return r.consistency_error; })(rows);
  const auto terminal_ratios =
      ratios([](const Row& r) { return r.terminal_error_vs_ref; })(rows);
  auto accelerating = [](const std::vector<double>& r) {
    bool ok = !r.empty();
    for (std::size_t i = 0; i < r.size(); ++i) {
      ok = ok && r[i] > 1.0;
      if (i > 0) ok = ok && r[i] > r[i - 1];
    }
    return ok;
  };
  const bool consistency_accel = accelerating(consistency_ratios);
  const bool terminal_accel = accelerating(terminal_ratios);
  if (!consistency_accel || !terminal_accel)
    std::cerr << "note: error ladder is not uniformly accelerating "
                 "(consistency="
              << consistency_accel << ", terminal=" << terminal_accel
              << "); see the emitted table\n";

  // BKW oracle validation at the reference order
  std::optional<double> oracle_residual;
  if (is_bkw && exp.oracle_check) {
    double worst = 0.0;
    for (int i = 0; i <= 10; ++i)
      worst = std::max(worst,
                       bkw::residual(table_ref, grid_ref, 0.5 * i,
                                     cfg.initial_condition.bkw_temperature));
    oracle_residual = worst;
  }

  // outputs
  std::filesystem::path csv_path = out_base;
  csv_path += ".csv";
  std::filesystem::path json_path = out_base;
  json_path += ".json";
  if (out_base.has_parent_path())
    std::filesystem::create_directories(out_base.parent_path());

  std::ostringstream csv;
  csv << "order,consistency_error,terminal_error_vs_ref,terminal_error_vs_"
         "analytic\n";
  for (const auto& row : rows) {
    csv << row.order << ',' << format_double(row.consistency_error) << ','
        << format_double(row.terminal_error_vs_ref) << ','
        << (row.terminal_error_vs_analytic
                ? format_double(*row.terminal_error_vs_analytic)
                : std::string())
        << '\n';
  }
  write_text_file(csv_path, csv.str());

  json out;
  out["command"] = "convergence";
  out["dim"] = cfg.kernel.dim;
  out["orders"] = exp.orders;
  out["reference_order"] = exp.reference_order;
  out["time"] = exp.terminal_time;
  out["consistency_time"] = exp.consistency_time;
  out["sobolev_r"] = exp.sobolev_r;
  out["dt"] = cfg.solver.dt;
  out["rows"] = json::array();
  for (const auto& row : rows) {
    json jrow = {{"order", row.order},
                 {"consistency_error", row.consistency_error},
                 {"terminal_error_vs_ref", row.terminal_error_vs_ref}};
    jrow["terminal_error_vs_analytic"] =
        row.terminal_error_vs_analytic ? json(*row.terminal_error_vs_analytic)
                                       : json(nullptr);
    out["rows"].push_back(jrow);
  }
  out["consistency_ratios"] = consistency_ratios;
  out["terminal_ratios"] = terminal_ratios;
  out["consistency_accelerating"] = consistency_accel;
  out["terminal_accelerating"] = terminal_accel;
  if (oracle_residual) {
    out["bkw_oracle"] = {{"max_residual", *oracle_residual},
                         {"validated", *oracle_residual < 1e-5},
                         {"window", {0.0, 5.0}}};
  } else {
    out["bkw_oracle"] = nullptr;
  }
  out["norms_note"] = kNormsNote;

  AssertionOutcome outcome;
  const json asserts = parse_assertions(cfg.experiment.assertions_json);
  for (const auto& [name, threshold] : asserts.items()) {
    if (name == "consistency_ratios_accelerating")
      outcome.check_flag(name, consistency_accel, threshold.get<bool>());
    else if (name == "terminal_ratios_accelerating")
      outcome.check_flag(name, terminal_accel, threshold.get<bool>());
    else if (name == "analytic_error_below") {
      const double value = rows.back().terminal_error_vs_analytic
                               ? *rows.back().terminal_error_vs_analytic
                               : std::nan("");
      outcome.check(name, value, threshold,
                    std::isfinite(value) && value < threshold.get<double>());
    } else if (name == "oracle_residual_below") {
      const double value = oracle_residual ? *oracle_residual : std::nan("");
      outcome.check(name, value, threshold,
                    std::isfinite(value) && value < threshold.get<double>());
    } else {
      throw ConfigError("config: unknown convergence assertion '" + name + "'");
    }
  }
  out["assertions"] = outcome.report;
  out["assertions_passed"] = outcome.all_passed;

  write_text_file(json_path, out.dump(2) + "\n");
  return outcome.all_passed ? kOk : kAssertionError;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Fourier-Galerkin spectral solver for the homogeneous "
               "Boltzmann equation with an equilibrium-preserving scheme"};
  app.require_subcommand(1);

  std::string config_path, out_path;

  auto* build = app.add_subcommand(
      "build-kernel", "Precompute the collision kernel modes into a cache file");
  build->add_option("--config", config_path, "JSON config path")->required();
  build->add_option("--out", out_path, "output cache file")->required();

  auto* runcmd = app.add_subcommand(
      "run", "Integrate a configured initial condition and emit CSV + JSON");
  runcmd->add_option("--config", config_path, "JSON config path")->required();
  runcmd->add_option("--out", out_path, "output base path (.csv/.json appended)")
      ->required();

  auto* conv = app.add_subcommand(
      "convergence", "Order-ladder consistency and solution-error study");
  conv->add_option("--config", config_path, "JSON config path")->required();
  conv->add_option("--out", out_path, "output base path (.csv/.json appended)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (build->parsed()) return cmd_build_kernel(config_path, out_path);
    if (runcmd->parsed()) return cmd_run(config_path, out_path);
    if (conv->parsed()) return cmd_convergence(config_path, out_path);
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SupportViolationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const RefinementError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const BlowUpError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const OverflowError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const NonPhysicalStateError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  }
}

}  // namespace boltzmann::cli
