// vrjp_lab: seed-reproducible simulation and experiment runner for
// reinforced jump processes on the integer line.
//
// Subcommands:
//   simulate    one trajectory -> trajectory.csv + local_times.csv + meta.json
//   couple      one shared-clock coupled pair -> coupled.csv + meta.json
//   diagnose    trajectory CSV -> series.csv + checks.json
//   experiment  replica ensemble -> verdict.json + replicas.csv
//   regime      print the weak/strong classification of a weight spec
//
// Exit codes: 0 pass, 1 experiment failed its thresholds, 2 configuration or
// usage error.

#include "vrjp/coupling.hpp"
#include "vrjp/diagnostics.hpp"
#include "vrjp/experiments.hpp"
#include "vrjp/io.hpp"
#include "vrjp/process.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace vrjp;
using json = nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

json load_config(const std::string& arg) {
  // Inline JSON is accepted anywhere a config path is, for one-liners.
  if (!arg.empty() && arg.front() == '{') return json::parse(arg);
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open config file '" + arg + "'");
  json j;
  in >> j;
  return j;
}

weights::WeightFunction weight_from_spec(const json& spec, std::vector<std::string>& errors) {
  const std::string kind = spec.value("kind", "");
  try {
    if (kind == "linear") return weights::WeightFunction::linear();
    if (kind == "power") return weights::WeightFunction::power(spec.value("a", 0.0));
    if (kind == "exp_shifted") return weights::WeightFunction::exp_shifted(spec.value("a", 0.0));
    errors.push_back("weight.kind must be linear | power | exp_shifted");
  } catch (const std::exception& e) {
    errors.push_back(std::string("weight: ") + e.what());
  }
  return weights::WeightFunction::linear();
}

process::VertexSet graph_from_spec(const json& spec, std::vector<std::string>& errors) {
  try {
    if (spec.is_string()) {
      const std::string g = spec.get<std::string>();
      if (g == "full_line") return process::VertexSet::full_line();
      if (g == "half_line") return process::VertexSet::half_line_plus();
      errors.push_back("graph must be full_line | half_line | {segment} | {mask}");
    } else if (spec.contains("segment")) {
      return process::VertexSet::segment(spec.at("segment").at("lo").get<std::int64_t>(),
                                         spec.at("segment").at("hi").get<std::int64_t>());
    } else if (spec.contains("mask")) {
      return process::VertexSet::mask(
          spec.at("mask").at("vertices").get<std::vector<std::int64_t>>());
    } else {
      errors.push_back("graph must be full_line | half_line | {segment} | {mask}");
    }
  } catch (const std::exception& e) {
    errors.push_back(std::string("graph: ") + e.what());
  }
  return process::VertexSet::full_line();
}

int fail_config(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::fprintf(stderr, "config error: %s\n", e.c_str());
  return kExitConfig;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::optional<std::uint64_t> replicas;
  std::string out = "runs";
  bool quiet = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_out) {
  cmd->add_option("--config", flags.config, "config file path or inline JSON")->required();
  cmd->add_option("--seed", flags.seed, "override the master seed");
  cmd->add_option("--horizon", flags.horizon, "override the time horizon");
  cmd->add_option("--replicas", flags.replicas, "override the replica count");
  if (needs_out) cmd->add_option("--out", flags.out, "output directory");
  cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
  cmd->add_flag("--verbose", flags.verbose, "print extra detail");
}

int cmd_simulate(const CommonFlags& flags) {
  const json cfg = load_config(flags.config);
  std::vector<std::string> errors;
  const auto w = weight_from_spec(cfg.value("weight", json{{"kind", "linear"}}), errors);
  const auto vset = graph_from_spec(cfg.value("graph", json("full_line")), errors);

  process::SimulateOptions opts;
  opts.horizon = flags.horizon.value_or(cfg.value("horizon", 0.0));
  opts.max_jumps = cfg.value("max_jumps", std::uint64_t{10'000'000});
  opts.ell_default = cfg.value("initial_local_time", 1.0);
  const std::string engine = cfg.value("engine", "reference");
  if (engine == "canonical")
    opts.engine = process::SimulateOptions::Engine::Canonical;
  else if (engine != "reference")
    errors.push_back("engine must be reference | canonical");
  if (!(opts.horizon > 0.0) && opts.max_jumps == 0)
    errors.push_back("horizon must be > 0 (or set max_jumps)");
  if (!(opts.ell_default >= 1.0)) errors.push_back("initial_local_time must be >= 1");
  if (!errors.empty()) return fail_config(errors);

  const std::uint64_t seed = flags.seed.value_or(cfg.value("seed", std::uint64_t{1}));
  const clocks::ClockBank bank(seed);
  auto traj = simulate(w, vset, bank, opts);
  traj.config_digest = io::hex64(io::fnv1a64_bytes(cfg.dump()));

  const std::filesystem::path out(flags.out);
  io::atomic_write(out / "trajectory.csv", io::trajectory_csv(traj));
  io::atomic_write(out / "local_times.csv", io::local_times_csv(traj));
  json meta = {{"seed", seed},
               {"config", cfg},
               {"config_digest", traj.config_digest},
               {"events", traj.events.size()},
               {"horizon", traj.horizon},
               {"max_jumps_hit", traj.max_jumps_hit},
               {"start", traj.start}};
  io::atomic_write(out / "meta.json", meta.dump(2) + "\n");
  if (!flags.quiet)
    std::printf("simulate: %zu events to t=%s -> %s\n", traj.events.size(),
                io::format_double(traj.horizon).c_str(), out.string().c_str());
  return kExitPass;
}

int cmd_couple(const CommonFlags& flags) {
  const json cfg = load_config(flags.config);
  std::vector<std::string> errors;
  const auto w = weight_from_spec(cfg.value("weight", json{{"kind", "linear"}}), errors);
  const std::uint64_t n_jumps = cfg.value("n_jumps", std::uint64_t{200});
  if (n_jumps == 0) errors.push_back("n_jumps must be >= 1");
  if (!errors.empty()) return fail_config(errors);

  const std::uint64_t seed = flags.seed.value_or(cfg.value("seed", std::uint64_t{1}));
  const clocks::ClockBank bank(seed);
  const auto paths = coupling::run_coupled_pair(w, bank, n_jumps);

  const std::filesystem::path out(flags.out);
  io::atomic_write(out / "coupled.csv", io::coupled_csv(paths));
  json meta = {{"seed", seed}, {"config", cfg}, {"a", paths.a_value}, {"n_jumps", n_jumps}};
  io::atomic_write(out / "meta.json", meta.dump(2) + "\n");
  if (!flags.quiet)
    std::printf("couple: %llu jumps, A=%s -> %s\n",
                static_cast<unsigned long long>(n_jumps),
                io::format_double(paths.a_value).c_str(), out.string().c_str());
  return kExitPass;
}

int cmd_diagnose(const CommonFlags& flags) {
  const json cfg = load_config(flags.config);
  std::vector<std::string> errors;
  const auto w = weight_from_spec(cfg.value("weight", json{{"kind", "linear"}}), errors);
  if (!cfg.contains("trajectory")) errors.push_back("missing field 'trajectory' (CSV path)");
  if (!errors.empty()) return fail_config(errors);

  std::ifstream in(cfg.at("trajectory").get<std::string>());
  if (!in) {
    errors.push_back("cannot open trajectory CSV '" + cfg.at("trajectory").get<std::string>() +
                     "'");
    return fail_config(errors);
  }
  std::string csv((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto traj = io::trajectory_from_csv(csv, cfg.value("initial_local_time", 1.0),
                                            cfg.value("horizon", -1.0));

  std::vector<double> grid;
  if (cfg.contains("grid")) grid = cfg.at("grid").get<std::vector<double>>();
  const auto series = diagnostics::compute_series(traj, w, grid);
  const double residual = diagnostics::decomposition_residual(series);
  const double residual_rel = diagnostics::decomposition_residual_relative(series);
  const auto bounds = diagnostics::pathwise_bound_checks(series);

  const std::filesystem::path out(flags.out);
  io::atomic_write(out / "series.csv", io::series_csv(series));
  auto check = [](const char* name, double statistic, double threshold) {
    return json{{"name", name},
                {"statistic", statistic},
                {"threshold", threshold},
                {"pass", statistic <= threshold}};
  };
  json checks = {
      {"checks",
       json::array({check("decomposition_residual_relative", residual_rel, 1e-8),
                    check("jump_size_violations",
                          static_cast<double>(bounds.jump_size_violations), 0.0),
                    check("sandwich_violations",
                          static_cast<double>(bounds.sandwich_violations), 0.0),
                    check("a_tail_violations", static_cast<double>(bounds.a_tail_violations),
                          0.0)})},
      {"decomposition_residual", residual},
      {"rows", bounds.rows},
      {"pass", residual_rel < 1e-8 && bounds.ok()},
  };
  io::atomic_write(out / "checks.json", checks.dump(2) + "\n");
  if (!flags.quiet)
    std::printf("diagnose: residual_rel=%s over %zu rows -> %s\n",
                io::format_double(residual_rel).c_str(), series.size(), out.string().c_str());
  return checks.at("pass").get<bool>() ? kExitPass : kExitFail;
}

int cmd_experiment(const CommonFlags& flags) {
  json cfg_json = load_config(flags.config);
  if (flags.seed) cfg_json["seed"] = *flags.seed;
  if (flags.horizon) cfg_json["horizon"] = *flags.horizon;
  if (flags.replicas) cfg_json["replicas"] = *flags.replicas;

  std::vector<std::string> errors;
  const auto cfg = experiments::ExperimentConfig::from_json(cfg_json, errors);
  if (!errors.empty()) return fail_config(errors);

  const auto verdict = experiments::run_experiment(cfg);
  experiments::write_artifacts(verdict, flags.out);
  if (!flags.quiet) {
    std::printf("%s: %s (statistic=%s threshold=%s) digest=%s\n", verdict.experiment.c_str(),
                verdict.pass ? "PASS" : "FAIL", io::format_double(verdict.statistic).c_str(),
                io::format_double(verdict.threshold).c_str(), verdict.digest.c_str());
    if (flags.verbose)
      for (const auto& c : verdict.checks)
        std::printf("  %-32s %-4s statistic=%s %s %s\n", c.name.c_str(),
                    c.pass ? "ok" : "FAIL", io::format_double(c.statistic).c_str(),
                    c.comparison.c_str(), io::format_double(c.threshold).c_str());
  }
  return verdict.pass ? kExitPass : kExitFail;
}

int cmd_regime(const CommonFlags& flags) {
  const json cfg = load_config(flags.config);
  std::vector<std::string> errors;
  const json spec = cfg.contains("weight") ? cfg.at("weight") : cfg;
  const auto w = weight_from_spec(spec, errors);
  if (!errors.empty()) return fail_config(errors);

  const auto report = weights::classify_regime(w);
  json j = {{"regime", report.regime == weights::Regime::Strong ? "strong" : "weak"},
            {"tail_integral_at_1", std::isfinite(report.tail_integral_at_1)
                                       ? json(report.tail_integral_at_1)
                                       : json("inf")}};
  if (report.rho_condition) {
    j["rho_condition"] = {{"rho", report.rho_condition->rho},
                          {"verified", report.rho_condition->verified},
                          {"grid_max_violation", report.rho_condition->grid_max_violation}};
  }
  std::printf("%s\n", j.dump(2).c_str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinforced jump process lab"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, couple_flags, diagnose_flags, experiment_flags, regime_flags;
  auto* sim = app.add_subcommand("simulate", "run one trajectory and export it");
  add_common(sim, simulate_flags, true);
  auto* cpl = app.add_subcommand("couple", "run one shared-clock coupled pair");
  add_common(cpl, couple_flags, true);
  auto* dia = app.add_subcommand("diagnose", "compute the diagnostic series of a trajectory CSV");
  add_common(dia, diagnose_flags, true);
  auto* exp = app.add_subcommand("experiment", "run a replica ensemble and write its verdict");
  add_common(exp, experiment_flags, true);
  auto* reg = app.add_subcommand("regime", "classify a weight spec");
  add_common(reg, regime_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(simulate_flags);
    if (cpl->parsed()) return cmd_couple(couple_flags);
    if (dia->parsed()) return cmd_diagnose(diagnose_flags);
    if (exp->parsed()) return cmd_experiment(experiment_flags);
    if (reg->parsed()) return cmd_regime(regime_flags);
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
