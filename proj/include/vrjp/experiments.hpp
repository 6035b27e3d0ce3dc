#pragma once

// Monte Carlo harness: replica ensembles, behaviour detectors
// (localization / recurrence / transience signatures), statistical backends,
// and self-verifying verdict reports.

#include "vrjp/clocks.hpp"
#include "vrjp/process.hpp"
#include "vrjp/stats.hpp"
#include "vrjp/weights.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vrjp::experiments {

using process::Trajectory;
using stats::KsResult;
using stats::ks_two_sample;

enum class Kind {
  Localization,
  Recurrence,
  TwoVertexWeak,
  TwoVertexStrong,
  CouplingDomination,
  CouplingDistribution,
  RhoSurplus,
  EngineComparison,
  DiagnosticsSuite,
  Nontransience,
};

std::string kind_name(Kind kind);
std::optional<Kind> kind_from_name(const std::string& name);

struct DetectorParams {
  double window_fraction = 0.5;    // final fraction of the horizon inspected
  double side_growth_tol = 0.05;   // relative growth allowed for side vertices
  double center_growth_min = 0.5;  // center must gain this fraction of the window
  double early_visit_fraction = 0.1;  // transient signature: last visit this early
  std::int64_t probe_radius = 3;      // recurrence probe set {-r, ..., r}
};

struct ExperimentConfig {
  Kind kind = Kind::Localization;
  nlohmann::json weight_spec = {{"kind", "power"}, {"a", 2.0}};
  nlohmann::json graph_spec = "full_line";
  double horizon = 1e4;
  std::uint64_t max_jumps = 50'000'000;
  double ell_default = 1.0;
  std::uint64_t replicas = 500;
  std::uint64_t seed = 1;
  double alpha = 0.01;
  DetectorParams detector;

  // Pre-registered verdict thresholds.
  double pass_fraction = 0.95;   // localization / recurrence / weak ensembles
  std::string comparison = "ge";

  // Kind-specific knobs.
  std::uint64_t n_jumps = 200;                           // coupling domination
  std::vector<std::uint64_t> ks_jump_counts = {2, 5, 10};  // coupling distribution
  double rho_a = 3.0;
  double rho_b = 2.0;
  std::uint64_t rho_grid = 32;
  double min_local_threshold = 100.0;  // two-vertex weak
  double plateau_tol = 1e-6;           // two-vertex strong
  double z_eps = 1e-3;
  double z_eps_max_fraction = 0.01;
  std::uint64_t residual_runs = 1000;  // diagnostics suite
  std::uint64_t residual_jumps = 500;
  double residual_tol = 1e-8;
  std::uint64_t martingale_runs = 10'000;
  std::vector<double> checkpoints = {1.0, 5.0, 10.0};
  std::vector<double> drift_steps = {0.01, 0.005};
  std::uint64_t envelope_evals = 1000;
  double envelope_horizon = 20.0;

  int threads = 0;  // 0: VRJP_LAB_THREADS or the OpenMP default

  weights::WeightFunction weight() const;
  process::VertexSet vertex_set() const;
  nlohmann::json to_json() const;

  // Collects every violation instead of stopping at the first.
  static ExperimentConfig from_json(const nlohmann::json& j, std::vector<std::string>& errors);
};

struct Check {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string comparison = "ge";  // ge | le | gt | lt | eq
  bool pass = false;
};

struct Verdict {
  std::string experiment;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::uint64_t n_replicas = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<Check> checks;
  nlohmann::json replicas = nlohmann::json::array();
  nlohmann::json report;  // kind-specific extras (e.g. the surplus estimate)
  std::string digest;     // over everything above; the timestamp is excluded
  std::string timestamp;

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Detectors (trajectory form; the ensembles use streaming equivalents that
// share the same decision rules)
// ---------------------------------------------------------------------------

struct LocalizationOutcome {
  bool localized = false;  // final-window events touch exactly 3 consecutive vertices
  std::optional<std::int64_t> center;
  bool side_plateau = false;  // sides frozen, center still growing
  bool degenerate = false;    // fewer than two vertices touched in the window
};
LocalizationOutcome detect_localization(const Trajectory& traj, const DetectorParams& params);

struct RecurrenceOutcome {
  bool recurrent = false;
  std::vector<std::int64_t> probes;
  std::vector<std::array<std::uint64_t, 3>> visits;  // per probe, at T/4, T/2, T
  std::array<double, 3> min_probe_local{};            // min over probes at the checkpoints
};
RecurrenceOutcome detect_recurrence(const Trajectory& traj, const DetectorParams& params);

// Last visit to the start this early plus displacement still growing late.
bool transient_signature(const Trajectory& traj, const DetectorParams& params);

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

Verdict run_experiment(const ExperimentConfig& cfg);

// verdict.json plus a per-replica summary CSV under out_dir.
void write_artifacts(const Verdict& verdict, const std::filesystem::path& out_dir);

}  // namespace vrjp::experiments
