#include "vrjp/experiments.hpp"

#include "vrjp/coupling.hpp"
#include "vrjp/diagnostics.hpp"
#include "vrjp/ensemble.hpp"
#include "vrjp/io.hpp"
#include "vrjp/two_vertex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <set>

namespace vrjp::experiments {

using clocks::ClockBank;
using clocks::replica_seed;
using clocks::substream_seed;
using process::LatticeEngine;
using process::TwoVertexProcess;
using process::VertexSet;
using weights::WeightFunction;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Kind names
// ---------------------------------------------------------------------------

namespace {
constexpr std::pair<Kind, const char*> kKindNames[] = {
    {Kind::Localization, "localization"},
    {Kind::Recurrence, "recurrence"},
    {Kind::TwoVertexWeak, "two_vertex_weak"},
    {Kind::TwoVertexStrong, "two_vertex_strong"},
    {Kind::CouplingDomination, "coupling_domination"},
    {Kind::CouplingDistribution, "coupling_distribution"},
    {Kind::RhoSurplus, "rho_surplus"},
    {Kind::EngineComparison, "engine_comparison"},
    {Kind::DiagnosticsSuite, "diagnostics_suite"},
    {Kind::Nontransience, "nontransience"},
};
}  // namespace

std::string kind_name(Kind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<Kind> kind_from_name(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

WeightFunction ExperimentConfig::weight() const {
  const std::string kind = weight_spec.value("kind", "");
  if (kind == "linear") return WeightFunction::linear();
  if (kind == "power") return WeightFunction::power(weight_spec.value("a", 0.0));
  if (kind == "exp_shifted") return WeightFunction::exp_shifted(weight_spec.value("a", 0.0));
  throw std::invalid_argument("unknown weight kind '" + kind + "'");
}

VertexSet ExperimentConfig::vertex_set() const {
  if (graph_spec.is_string()) {
    const std::string g = graph_spec.get<std::string>();
    if (g == "full_line") return VertexSet::full_line();
    if (g == "half_line") return VertexSet::half_line_plus();
    throw std::invalid_argument("unknown graph '" + g + "'");
  }
  if (graph_spec.contains("segment")) {
    const auto& s = graph_spec.at("segment");
    return VertexSet::segment(s.at("lo").get<std::int64_t>(), s.at("hi").get<std::int64_t>());
  }
  if (graph_spec.contains("mask")) {
    return VertexSet::mask(
        graph_spec.at("mask").at("vertices").get<std::vector<std::int64_t>>());
  }
  throw std::invalid_argument("unknown graph spec");
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = kind_name(kind);
  j["weight"] = weight_spec;
  j["graph"] = graph_spec;
  j["horizon"] = horizon;
  j["max_jumps"] = max_jumps;
  j["initial_local_time"] = ell_default;
  j["replicas"] = replicas;
  j["seed"] = seed;
  j["alpha"] = alpha;
  j["detector"] = {{"window_fraction", detector.window_fraction},
                   {"side_growth_tol", detector.side_growth_tol},
                   {"center_growth_min", detector.center_growth_min},
                   {"early_visit_fraction", detector.early_visit_fraction},
                   {"probe_radius", detector.probe_radius}};
  j["pass_fraction"] = pass_fraction;
  j["comparison"] = comparison;
  switch (kind) {
    case Kind::CouplingDomination:
      j["n_jumps"] = n_jumps;
      break;
    case Kind::CouplingDistribution:
      j["ks_jump_counts"] = ks_jump_counts;
      break;
    case Kind::RhoSurplus:
      j["rho_a"] = rho_a;
      j["rho_b"] = rho_b;
      j["rho_grid"] = rho_grid;
      break;
    case Kind::TwoVertexWeak:
      j["min_local_threshold"] = min_local_threshold;
      break;
    case Kind::TwoVertexStrong:
      j["plateau_tol"] = plateau_tol;
      j["z_eps"] = z_eps;
      j["z_eps_max_fraction"] = z_eps_max_fraction;
      break;
    case Kind::DiagnosticsSuite:
      j["residual_runs"] = residual_runs;
      j["residual_jumps"] = residual_jumps;
      j["residual_tol"] = residual_tol;
      j["martingale_runs"] = martingale_runs;
      j["checkpoints"] = checkpoints;
      j["drift_steps"] = drift_steps;
      j["envelope_evals"] = envelope_evals;
      j["envelope_horizon"] = envelope_horizon;
      break;
    default:
      break;
  }
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, std::vector<std::string>& errors) {
  ExperimentConfig cfg;
  auto fail = [&errors](const std::string& msg) { errors.push_back(msg); };

  if (!j.is_object()) {
    fail("config must be a JSON object");
    return cfg;
  }
  if (!j.contains("experiment") || !j.at("experiment").is_string()) {
    fail("missing string field 'experiment'");
  } else if (auto k = kind_from_name(j.at("experiment").get<std::string>())) {
    cfg.kind = *k;
  } else {
    fail("unknown experiment kind '" + j.at("experiment").get<std::string>() + "'");
  }

  if (j.contains("weight")) cfg.weight_spec = j.at("weight");
  const std::string wkind = cfg.weight_spec.value("kind", "");
  if (wkind != "linear" && wkind != "power" && wkind != "exp_shifted") {
    fail("weight.kind must be linear | power | exp_shifted");
  } else if (wkind != "linear") {
    if (!cfg.weight_spec.contains("a") || !cfg.weight_spec.at("a").is_number())
      fail("weight." + wkind + " needs a numeric field 'a'");
    else if (!(cfg.weight_spec.at("a").get<double>() > 0.0))
      fail("weight exponent/rate must be > 0");
  }

  if (j.contains("graph")) cfg.graph_spec = j.at("graph");
  try {
    (void)cfg.vertex_set();
  } catch (const std::exception& e) {
    fail(std::string("graph: ") + e.what());
  }

  auto get_num = [&](const char* key, double& dst, bool positive) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) {
      fail(std::string(key) + " must be numeric");
      return;
    }
    dst = j.at(key).get<double>();
    if (positive && !(dst > 0.0)) fail(std::string(key) + " must be > 0");
  };
  auto get_u64 = [&](const char* key, std::uint64_t& dst, bool positive) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer()) {
      fail(std::string(key) + " must be a non-negative integer");
      return;
    }
    const auto v = j.at(key).get<std::int64_t>();
    if (v < 0 || (positive && v == 0)) {
      fail(std::string(key) + " must be positive");
      return;
    }
    dst = static_cast<std::uint64_t>(v);
  };

  get_num("horizon", cfg.horizon, true);
  get_u64("max_jumps", cfg.max_jumps, true);
  get_num("initial_local_time", cfg.ell_default, true);
  if (!(cfg.ell_default >= 1.0)) fail("initial_local_time must be >= 1");
  get_u64("replicas", cfg.replicas, true);
  get_u64("seed", cfg.seed, false);
  get_num("alpha", cfg.alpha, true);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("alpha must lie in (0, 1)");

  if (j.contains("detector")) {
    const auto& d = j.at("detector");
    if (!d.is_object()) {
      fail("detector must be an object");
    } else {
      cfg.detector.window_fraction = d.value("window_fraction", cfg.detector.window_fraction);
      cfg.detector.side_growth_tol = d.value("side_growth_tol", cfg.detector.side_growth_tol);
      cfg.detector.center_growth_min =
          d.value("center_growth_min", cfg.detector.center_growth_min);
      cfg.detector.early_visit_fraction =
          d.value("early_visit_fraction", cfg.detector.early_visit_fraction);
      cfg.detector.probe_radius = d.value("probe_radius", cfg.detector.probe_radius);
    }
  }
  if (!(cfg.detector.window_fraction > 0.0 && cfg.detector.window_fraction < 1.0))
    fail("detector.window_fraction must lie in (0, 1)");

  get_num("pass_fraction", cfg.pass_fraction, true);
  if (j.contains("comparison")) {
    cfg.comparison = j.at("comparison").get<std::string>();
    if (cfg.comparison != "ge" && cfg.comparison != "le") fail("comparison must be ge | le");
  }

  get_u64("n_jumps", cfg.n_jumps, true);
  if (j.contains("ks_jump_counts"))
    cfg.ks_jump_counts = j.at("ks_jump_counts").get<std::vector<std::uint64_t>>();
  get_num("rho_a", cfg.rho_a, true);
  get_num("rho_b", cfg.rho_b, true);
  get_u64("rho_grid", cfg.rho_grid, true);
  if (cfg.kind == Kind::RhoSurplus && !(cfg.rho_a > cfg.rho_b && cfg.rho_b > 1.0))
    fail("rho surplus needs a > b > 1");
  get_num("min_local_threshold", cfg.min_local_threshold, true);
  get_num("plateau_tol", cfg.plateau_tol, true);
  get_num("z_eps", cfg.z_eps, true);
  get_num("z_eps_max_fraction", cfg.z_eps_max_fraction, true);
  get_u64("residual_runs", cfg.residual_runs, false);
  get_u64("residual_jumps", cfg.residual_jumps, true);
  get_num("residual_tol", cfg.residual_tol, true);
  get_u64("martingale_runs", cfg.martingale_runs, false);
  if (j.contains("checkpoints")) cfg.checkpoints = j.at("checkpoints").get<std::vector<double>>();
  if (j.contains("drift_steps")) cfg.drift_steps = j.at("drift_steps").get<std::vector<double>>();
  get_u64("envelope_evals", cfg.envelope_evals, false);
  get_num("envelope_horizon", cfg.envelope_horizon, true);
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();

  return cfg;
}

// ---------------------------------------------------------------------------
// Verdict assembly
// ---------------------------------------------------------------------------

namespace {

bool check_passes(double statistic, double threshold, const std::string& cmp) {
  if (cmp == "ge") return statistic >= threshold;
  if (cmp == "le") return statistic <= threshold;
  if (cmp == "gt") return statistic > threshold;
  if (cmp == "lt") return statistic < threshold;
  if (cmp == "eq") return statistic == threshold;
  throw std::logic_error("unknown comparison '" + cmp + "'");
}

Check make_check(std::string name, double statistic, double threshold, std::string cmp) {
  Check c;
  c.name = std::move(name);
  c.statistic = statistic;
  c.threshold = threshold;
  c.comparison = std::move(cmp);
  c.pass = check_passes(c.statistic, c.threshold, c.comparison);
  return c;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Verdict make_verdict(const ExperimentConfig& cfg, std::vector<Check> checks, json replicas,
                     json report = json::object()) {
  Verdict v;
  v.experiment = kind_name(cfg.kind);
  v.config = cfg.to_json();
  v.seed = cfg.seed;
  v.n_replicas = cfg.replicas;
  v.checks = std::move(checks);
  v.replicas = std::move(replicas);
  v.report = std::move(report);
  v.pass = true;
  for (const auto& c : v.checks) v.pass = v.pass && c.pass;
  if (!v.checks.empty()) {
    v.statistic = v.checks.front().statistic;
    v.threshold = v.checks.front().threshold;
  }

  json body;
  body["experiment"] = v.experiment;
  body["config"] = v.config;
  body["seed"] = v.seed;
  body["n_replicas"] = v.n_replicas;
  body["statistic"] = v.statistic;
  body["threshold"] = v.threshold;
  body["pass"] = v.pass;
  json jchecks = json::array();
  for (const auto& c : v.checks)
    jchecks.push_back({{"name", c.name},
                       {"statistic", c.statistic},
                       {"threshold", c.threshold},
                       {"comparison", c.comparison},
                       {"pass", c.pass}});
  body["checks"] = jchecks;
  body["report"] = v.report;
  body["replicas"] = v.replicas;
  v.digest = io::hex64(io::fnv1a64_bytes(body.dump()));
  v.timestamp = utc_timestamp();
  return v;
}

}  // namespace

json Verdict::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config"] = config;
  j["seed"] = seed;
  j["n_replicas"] = n_replicas;
  j["statistic"] = statistic;
  j["threshold"] = threshold;
  j["pass"] = pass;
  json jchecks = json::array();
  for (const auto& c : checks)
    jchecks.push_back({{"name", c.name},
                       {"statistic", c.statistic},
                       {"threshold", c.threshold},
                       {"comparison", c.comparison},
                       {"pass", c.pass}});
  j["checks"] = jchecks;
  j["report"] = report;
  j["replicas"] = replicas;
  j["digest"] = digest;
  j["timestamp"] = timestamp;
  return j;
}

// ---------------------------------------------------------------------------
// Detector decisions (shared between trajectory and streaming forms)
// ---------------------------------------------------------------------------

namespace {

struct LocalizationObs {
  std::set<std::int64_t> touched;              // endpoints of final-window events
  std::map<std::int64_t, double> occupation;   // time per vertex inside the window
  std::function<double(std::int64_t)> l_start;  // local times at the window start
  std::function<double(std::int64_t)> l_end;    // local times at the horizon
  double window_len = 0.0;
};

LocalizationOutcome decide_localization(const LocalizationObs& obs, const DetectorParams& p) {
  LocalizationOutcome out;
  if (obs.touched.size() < 2) {
    out.degenerate = true;  // the process keeps jumping; a silent window is a failure
    return out;
  }
  out.localized = obs.touched.size() == 3 &&
                  *obs.touched.rbegin() - *obs.touched.begin() == 2;
  std::int64_t best = *obs.touched.begin();
  double best_occ = -1.0;
  for (const auto& [v, occ] : obs.occupation) {
    if (occ > best_occ) {
      best = v;
      best_occ = occ;
    }
  }
  out.center = best;
  if (!out.localized) return out;

  bool sides_ok = obs.touched.count(best - 1) == 1 && obs.touched.count(best + 1) == 1;
  for (std::int64_t side : {best - 1, best + 1}) {
    if (!sides_ok) break;
    const double start = obs.l_start(side);
    const double growth = obs.l_end(side) - start;
    sides_ok = growth < p.side_growth_tol * start;
  }
  const double center_growth = obs.l_end(best) - obs.l_start(best);
  out.side_plateau = sides_ok && center_growth > p.center_growth_min * obs.window_len;
  return out;
}

struct RecurrenceObs {
  std::vector<std::int64_t> probes;
  std::vector<std::array<std::uint64_t, 3>> visits;
  std::vector<std::array<double, 3>> local;
};

RecurrenceOutcome decide_recurrence(const RecurrenceObs& obs) {
  RecurrenceOutcome out;
  out.probes = obs.probes;
  out.visits = obs.visits;
  bool ok = !obs.probes.empty();
  for (std::size_t i = 0; i < obs.probes.size(); ++i)
    ok = ok && obs.visits[i][0] < obs.visits[i][1] && obs.visits[i][1] < obs.visits[i][2];
  for (int c = 0; c < 3; ++c) {
    double mn = weights::kInf;
    for (const auto& l : obs.local) mn = std::min(mn, l[c]);
    out.min_probe_local[c] = mn;
  }
  ok = ok && out.min_probe_local[0] < out.min_probe_local[1] &&
       out.min_probe_local[1] < out.min_probe_local[2];
  out.recurrent = ok;
  return out;
}

struct SignatureObs {
  double last_at_start = 0.0;
  std::int64_t maxdisp_half = 0;
  std::int64_t maxdisp_full = 0;
  double horizon = 0.0;
};

bool decide_signature(const SignatureObs& obs, const DetectorParams& p) {
  return obs.last_at_start <= p.early_visit_fraction * obs.horizon &&
         obs.maxdisp_full > obs.maxdisp_half;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory-form detectors
// ---------------------------------------------------------------------------

LocalizationOutcome detect_localization(const Trajectory& traj, const DetectorParams& params) {
  const double window_start = (1.0 - params.window_fraction) * traj.horizon;
  LocalizationObs obs;
  obs.window_len = traj.horizon - window_start;

  std::int64_t pos = traj.start;
  double prev = 0.0;
  for (const auto& ev : traj.events) {
    if (ev.tau >= window_start) {
      obs.touched.insert(ev.from);
      obs.touched.insert(ev.to);
      obs.occupation[ev.from] += ev.tau - std::max(prev, window_start);
    }
    pos = ev.to;
    prev = ev.tau;
  }
  obs.occupation[pos] += traj.horizon - std::max(prev, window_start);

  obs.l_start = [&](std::int64_t v) { return traj.local_time(v, window_start); };
  obs.l_end = [&](std::int64_t v) { return traj.local_time(v, traj.horizon); };
  return decide_localization(obs, params);
}

RecurrenceOutcome detect_recurrence(const Trajectory& traj, const DetectorParams& params) {
  RecurrenceObs obs;
  for (std::int64_t v = -params.probe_radius; v <= params.probe_radius; ++v)
    if (traj.vset.contains(v)) obs.probes.push_back(v);
  const std::array<double, 3> cps = {0.25 * traj.horizon, 0.5 * traj.horizon, traj.horizon};

  obs.visits.assign(obs.probes.size(), {0, 0, 0});
  obs.local.assign(obs.probes.size(), {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < obs.probes.size(); ++i) {
    const std::int64_t x = obs.probes[i];
    for (int c = 0; c < 3; ++c) {
      std::uint64_t count = traj.start == x ? 1 : 0;
      for (const auto& ev : traj.events) {
        if (ev.tau > cps[c]) break;
        if (ev.to == x) ++count;
      }
      obs.visits[i][c] = count;
      obs.local[i][c] = traj.local_time(x, cps[c]);
    }
  }
  return decide_recurrence(obs);
}

bool transient_signature(const Trajectory& traj, const DetectorParams& params) {
  SignatureObs obs;
  obs.horizon = traj.horizon;
  std::int64_t pos = traj.start;
  double last_departure = 0.0;
  for (const auto& ev : traj.events) {
    if (ev.from == traj.start) last_departure = ev.tau;
    const std::int64_t disp = std::abs(ev.to - traj.start);
    if (ev.tau <= 0.5 * traj.horizon) obs.maxdisp_half = std::max(obs.maxdisp_half, disp);
    obs.maxdisp_full = std::max(obs.maxdisp_full, disp);
    pos = ev.to;
  }
  obs.last_at_start = pos == traj.start ? traj.horizon : last_departure;
  return decide_signature(obs, params);
}

// ---------------------------------------------------------------------------
// Ensemble runners
// ---------------------------------------------------------------------------

namespace {

// Local times over the visited range at a fixed time, with the initial value
// as fallback outside.
struct RangeSnapshot {
  std::int64_t lo = 0;
  std::vector<double> vals;
  double fallback = 1.0;

  double at(std::int64_t v) const {
    const std::int64_t idx = v - lo;
    if (idx < 0 || idx >= static_cast<std::int64_t>(vals.size())) return fallback;
    return vals[static_cast<std::size_t>(idx)];
  }
};

RangeSnapshot snapshot_range(const LatticeEngine& eng, double t, double fallback) {
  RangeSnapshot s;
  s.fallback = fallback;
  s.lo = eng.visited_min() - 1;
  const std::int64_t hi = eng.visited_max() + 1;
  s.vals.reserve(static_cast<std::size_t>(hi - s.lo + 1));
  for (std::int64_t v = s.lo; v <= hi; ++v) s.vals.push_back(eng.local_time_at(v, t));
  return s;
}

void merge_errors(json& replicas, const std::vector<std::optional<std::string>>& errors) {
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (errors[i]) replicas[i]["error"] = *errors[i];
}

Verdict run_localization(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const VertexSet vset = cfg.vertex_set();
  struct Rec {
    bool localized = false, side_plateau = false, degenerate = false, budget_hit = false;
    std::int64_t center = 0;
    bool has_center = false;
    std::uint64_t events = 0;
  };
  std::vector<Rec> recs(cfg.replicas);

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    Rec& rec = recs[i];
    const ClockBank bank(replica_seed(cfg.seed, i));
    LatticeEngine eng(w, vset, bank, LatticeEngine::Law::Reference, cfg.ell_default);
    const double window_start = (1.0 - cfg.detector.window_fraction) * cfg.horizon;
    std::uint64_t used = eng.run_until(window_start, cfg.max_jumps);
    if (used == cfg.max_jumps) {
      rec.budget_hit = true;
      rec.events = used;
      return;
    }
    const RangeSnapshot at_start = snapshot_range(eng, window_start, cfg.ell_default);

    LocalizationObs obs;
    obs.window_len = cfg.horizon - window_start;
    double last = window_start;
    std::int64_t cur = eng.current();
    used += eng.run_until(cfg.horizon, cfg.max_jumps - used,
                          [&](double tau, std::int64_t from, std::int64_t to) {
                            obs.touched.insert(from);
                            obs.touched.insert(to);
                            obs.occupation[from] += tau - last;
                            last = tau;
                            cur = to;
                          });
    rec.events = used;
    if (used == cfg.max_jumps && eng.peek().tau < cfg.horizon) {
      rec.budget_hit = true;
      return;
    }
    obs.occupation[cur] += cfg.horizon - last;
    obs.l_start = [&](std::int64_t v) { return at_start.at(v); };
    obs.l_end = [&](std::int64_t v) { return eng.local_time_at(v, cfg.horizon); };
    const LocalizationOutcome outcome = decide_localization(obs, cfg.detector);
    rec.localized = outcome.localized;
    rec.side_plateau = outcome.side_plateau;
    rec.degenerate = outcome.degenerate;
    if (outcome.center) {
      rec.center = *outcome.center;
      rec.has_center = true;
    }
  });

  std::uint64_t good = 0;
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    const Rec& r = recs[i];
    if (r.localized && r.side_plateau) ++good;
    json row = {{"replica", i},          {"localized", r.localized},
                {"side_plateau", r.side_plateau}, {"degenerate", r.degenerate},
                {"budget_hit", r.budget_hit},     {"events", r.events}};
    if (r.has_center) row["center"] = r.center;
    replicas.push_back(std::move(row));
  }
  merge_errors(replicas, errors);
  const double frac = static_cast<double>(good) / static_cast<double>(cfg.replicas);
  std::vector<Check> checks = {
      make_check("localized_fraction", frac, cfg.pass_fraction, cfg.comparison)};
  return make_verdict(cfg, std::move(checks), std::move(replicas));
}

Verdict run_recurrence(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const VertexSet vset = cfg.vertex_set();
  std::vector<std::int64_t> probes;
  for (std::int64_t v = -cfg.detector.probe_radius; v <= cfg.detector.probe_radius; ++v)
    if (vset.contains(v)) probes.push_back(v);

  struct Rec {
    bool recurrent = false, budget_hit = false;
    std::array<double, 3> min_local{};
  };
  std::vector<Rec> recs(cfg.replicas);

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    Rec& rec = recs[i];
    const ClockBank bank(replica_seed(cfg.seed, i));
    LatticeEngine eng(w, vset, bank, LatticeEngine::Law::Reference, cfg.ell_default);
    const std::array<double, 3> cps = {0.25 * cfg.horizon, 0.5 * cfg.horizon, cfg.horizon};

    RecurrenceObs obs;
    obs.probes = probes;
    obs.visits.assign(probes.size(), {0, 0, 0});
    obs.local.assign(probes.size(), {0.0, 0.0, 0.0});
    std::vector<std::uint64_t> arrivals(probes.size(), 0);
    for (std::size_t p = 0; p < probes.size(); ++p)
      if (eng.current() == probes[p]) arrivals[p] = 1;

    std::uint64_t used = 0;
    for (int c = 0; c < 3; ++c) {
      used += eng.run_until(cps[c], cfg.max_jumps - used,
                            [&](double, std::int64_t, std::int64_t to) {
                              for (std::size_t p = 0; p < probes.size(); ++p)
                                if (to == probes[p]) ++arrivals[p];
                            });
      if (used == cfg.max_jumps && eng.peek().tau < cps[c]) {
        rec.budget_hit = true;
        return;
      }
      for (std::size_t p = 0; p < probes.size(); ++p) {
        obs.visits[p][c] = arrivals[p];
        obs.local[p][c] = eng.local_time_at(probes[p], cps[c]);
      }
    }
    const RecurrenceOutcome outcome = decide_recurrence(obs);
    rec.recurrent = outcome.recurrent;
    rec.min_local = outcome.min_probe_local;
  });

  std::uint64_t good = 0;
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    if (recs[i].recurrent) ++good;
    replicas.push_back({{"replica", i},
                        {"recurrent", recs[i].recurrent},
                        {"budget_hit", recs[i].budget_hit},
                        {"min_probe_local", recs[i].min_local}});
  }
  merge_errors(replicas, errors);
  const double frac = static_cast<double>(good) / static_cast<double>(cfg.replicas);
  std::vector<Check> checks = {
      make_check("recurrent_fraction", frac, cfg.pass_fraction, cfg.comparison)};
  return make_verdict(cfg, std::move(checks), std::move(replicas));
}

Verdict run_nontransience(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const VertexSet vset = cfg.vertex_set();
  struct Rec {
    bool signature = false, budget_hit = false;
    double last_at_start = 0.0;
    std::int64_t disp_half = 0, disp_full = 0;
  };
  std::vector<Rec> recs(cfg.replicas);

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    Rec& rec = recs[i];
    const ClockBank bank(replica_seed(cfg.seed, i));
    LatticeEngine eng(w, vset, bank, LatticeEngine::Law::Reference, cfg.ell_default);
    const std::int64_t start = eng.current();

    SignatureObs obs;
    obs.horizon = cfg.horizon;
    double last_departure = 0.0;
    std::int64_t disp = 0;
    auto hook = [&](double tau, std::int64_t from, std::int64_t to) {
      if (from == start) last_departure = tau;
      disp = std::max<std::int64_t>(disp, std::abs(to - start));
    };
    std::uint64_t used = eng.run_until(0.5 * cfg.horizon, cfg.max_jumps, hook);
    obs.maxdisp_half = disp;
    used += eng.run_until(cfg.horizon, cfg.max_jumps - used, hook);
    if (used == cfg.max_jumps && eng.peek().tau < cfg.horizon) {
      rec.budget_hit = true;
      return;
    }
    obs.maxdisp_full = disp;
    obs.last_at_start = eng.current() == start ? cfg.horizon : last_departure;
    rec.signature = decide_signature(obs, cfg.detector);
    rec.last_at_start = obs.last_at_start;
    rec.disp_half = obs.maxdisp_half;
    rec.disp_full = obs.maxdisp_full;
  });

  std::uint64_t flagged = 0;
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    if (recs[i].signature) ++flagged;
    replicas.push_back({{"replica", i},
                        {"transient_signature", recs[i].signature},
                        {"budget_hit", recs[i].budget_hit},
                        {"last_at_start", recs[i].last_at_start},
                        {"maxdisp_half", recs[i].disp_half},
                        {"maxdisp_full", recs[i].disp_full}});
  }
  merge_errors(replicas, errors);
  const double frac = static_cast<double>(flagged) / static_cast<double>(cfg.replicas);
  std::vector<Check> checks = {make_check("transient_signature_fraction", frac,
                                          cfg.pass_fraction, cfg.comparison)};
  return make_verdict(cfg, std::move(checks), std::move(replicas));
}

Verdict run_two_vertex_weak(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  struct Rec {
    double min_early = 0.0, min_final = 0.0;
    bool budget_hit = false;
  };
  std::vector<Rec> recs(cfg.replicas);
  const double t_early = cfg.horizon / 10.0;

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    const ClockBank bank(replica_seed(cfg.seed, i));
    TwoVertexProcess p(w, bank);
    bool ok = p.run_to(t_early, cfg.max_jumps);
    recs[i].min_early = std::min(p.local_time_at(0, t_early), p.local_time_at(1, t_early));
    if (ok) ok = p.run_to(cfg.horizon, cfg.max_jumps - p.jumps());
    recs[i].min_final =
        std::min(p.local_time_at(0, cfg.horizon), p.local_time_at(1, cfg.horizon));
    recs[i].budget_hit = !ok;
  });

  std::uint64_t exceeds = 0, grew = 0;
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    if (!recs[i].budget_hit && recs[i].min_final > cfg.min_local_threshold) ++exceeds;
    if (!recs[i].budget_hit && recs[i].min_final > recs[i].min_early) ++grew;
    replicas.push_back({{"replica", i},
                        {"min_local_early", recs[i].min_early},
                        {"min_local_final", recs[i].min_final},
                        {"budget_hit", recs[i].budget_hit}});
  }
  merge_errors(replicas, errors);
  const double n = static_cast<double>(cfg.replicas);
  std::vector<Check> checks = {
      make_check("min_local_exceeds_fraction", static_cast<double>(exceeds) / n,
                 cfg.pass_fraction, "ge"),
      make_check("min_local_growth_fraction", static_cast<double>(grew) / n, 1.0, "ge")};
  return make_verdict(cfg, std::move(checks), std::move(replicas));
}

Verdict run_two_vertex_strong(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  diagnostics::ZLimitConfig zc;
  zc.n_replicas = cfg.replicas;
  zc.horizon = cfg.horizon;
  zc.master_seed = cfg.seed;
  zc.plateau_tol = cfg.plateau_tol;
  zc.eps = {1e-1, 1e-2, cfg.z_eps};
  zc.max_jumps = cfg.max_jumps;
  zc.threads = cfg.threads;
  const diagnostics::ZLimitSamples s = diagnostics::z_limit_samples(w, zc);

  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i)
    replicas.push_back({{"replica", i},
                        {"z", s.z[i]},
                        {"min_local_half", s.min_l_half[i]},
                        {"min_local_full", s.min_l_full[i]},
                        {"budget_hit", s.budget_hit[i] != 0}});

  json report = {{"frac_below", s.frac_below},
                 {"eps", zc.eps},
                 {"self_consistency_p", s.self_consistency.p},
                 {"censored", s.censored},
                 {"budget_hit_replicas", s.n_budget_hit}};
  std::vector<Check> checks = {
      make_check("plateau_fraction", s.plateau_fraction, cfg.pass_fraction, "ge"),
      make_check("z_duplicates", static_cast<double>(s.duplicate_count), 0.0, "eq"),
      make_check("z_near_zero_fraction", s.frac_below.back(), cfg.z_eps_max_fraction, "lt")};
  return make_verdict(cfg, std::move(checks), std::move(replicas), std::move(report));
}

Verdict run_coupling_domination(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  struct Rec {
    std::uint64_t violations = 0;
    double min_gap0 = 0.0, min_gap1 = 0.0, a = 0.0;
  };
  std::vector<Rec> recs(cfg.replicas);

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    const ClockBank bank(replica_seed(cfg.seed, i));
    const auto paths = coupling::run_coupled_pair(w, bank, cfg.n_jumps);
    Rec& rec = recs[i];
    rec.a = paths.a_value;
    rec.min_gap0 = weights::kInf;
    rec.min_gap1 = weights::kInf;
    for (std::size_t k = 0; k < paths.tilde_l0.size(); ++k) {
      const double gap0 = paths.tilde_l0[k] - paths.star_l0[k];
      const double gap1 = paths.star_l1[k] - paths.tilde_l1[k];
      rec.min_gap0 = std::min(rec.min_gap0, gap0);
      rec.min_gap1 = std::min(rec.min_gap1, gap1);
      if (!(gap0 > 0.0) || !(gap1 > 0.0)) ++rec.violations;
    }
  });

  std::uint64_t violations = 0;
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    violations += recs[i].violations;
    replicas.push_back({{"replica", i},
                        {"violations", recs[i].violations},
                        {"min_gap_l0", recs[i].min_gap0},
                        {"min_gap_l1", recs[i].min_gap1},
                        {"a", recs[i].a}});
  }
  merge_errors(replicas, errors);
  std::vector<Check> checks = {
      make_check("domination_violations", static_cast<double>(violations), 0.0, "eq")};
  return make_verdict(cfg, std::move(checks), std::move(replicas));
}

Verdict run_coupling_distribution(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const std::size_t nk = cfg.ks_jump_counts.size();

  std::vector<std::vector<double>> star_c1(nk), star_c2(nk), tilde_c1(nk), tilde_c2(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    star_c1[k].resize(cfg.replicas);
    star_c2[k].resize(cfg.replicas);
    tilde_c1[k].resize(cfg.replicas);
    tilde_c2[k].resize(cfg.replicas);
  }

  const std::uint64_t star_master = substream_seed(cfg.seed, "star");
  const std::uint64_t tilde_master = substream_seed(cfg.seed, "tilde");
  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    {
      const ClockBank bank(replica_seed(star_master, i));
      const double a =
          clocks::ExpStream(substream_seed(bank.master_seed(), "A"))(0);
      TwoVertexProcess star(w, bank, 1.0, 1.0 + a, 0);
      std::uint64_t jump = 0;
      for (std::size_t k = 0; k < nk; ++k) {
        while (jump < cfg.ks_jump_counts[k]) {
          star.step();
          ++jump;
        }
        star_c1[k][i] = star.local_time(1);
        star_c2[k][i] = star.local_time(0);
      }
    }
    {
      const ClockBank bank(replica_seed(tilde_master, i));
      TwoVertexProcess tilde(w, bank, 1.0, 1.0, 0);
      std::uint64_t jump = 0;
      for (std::size_t k = 0; k < nk; ++k) {
        while (jump < cfg.ks_jump_counts[k] + 1) {
          tilde.step();
          ++jump;
        }
        tilde_c1[k][i] = tilde.local_time(0);
        tilde_c2[k][i] = tilde.local_time(1);
      }
    }
  });
  for (const auto& e : errors)
    if (e) throw std::runtime_error("coupling distribution replica failed: " + *e);

  std::vector<Check> checks;
  json report = json::array();
  for (std::size_t k = 0; k < nk; ++k) {
    const auto ks1 = stats::ks_two_sample(star_c1[k], tilde_c1[k], cfg.alpha);
    const auto ks2 = stats::ks_two_sample(star_c2[k], tilde_c2[k], cfg.alpha);
    const std::string n_str = std::to_string(cfg.ks_jump_counts[k]);
    checks.push_back(make_check("ks_p_coord1_n" + n_str, ks1.p, cfg.alpha, "ge"));
    checks.push_back(make_check("ks_p_coord2_n" + n_str, ks2.p, cfg.alpha, "ge"));
    report.push_back({{"n", cfg.ks_jump_counts[k]},
                      {"d_coord1", ks1.d},
                      {"p_coord1", ks1.p},
                      {"d_coord2", ks2.d},
                      {"p_coord2", ks2.p}});
  }

  // The samples themselves are the per-replica records.
  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    json row = {{"replica", i}};
    for (std::size_t k = 0; k < nk; ++k) {
      const std::string n_str = std::to_string(cfg.ks_jump_counts[k]);
      row["star_l1_n" + n_str] = star_c1[k][i];
      row["star_l0_n" + n_str] = star_c2[k][i];
      row["tilde_l0_n" + n_str] = tilde_c1[k][i];
      row["tilde_l1_n" + n_str] = tilde_c2[k][i];
    }
    replicas.push_back(std::move(row));
  }
  return make_verdict(cfg, std::move(checks), std::move(replicas), std::move(report));
}

Verdict run_rho_surplus(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const double a = cfg.rho_a, b = cfg.rho_b;
  std::vector<double> levels(cfg.rho_grid);
  for (std::uint64_t k = 0; k < cfg.rho_grid; ++k)
    levels[k] = b + (a - b) * static_cast<double>(k) / static_cast<double>(cfg.rho_grid - 1);
  levels.back() = a;

  std::vector<double> direct(cfg.replicas), quadrature(cfg.replicas);
  std::vector<std::uint8_t> censored(cfg.replicas, 0);

  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    const ClockBank bank(replica_seed(cfg.seed, i));
    const auto sample = coupling::xi_levels(w, bank, a, b, levels, cfg.max_jumps);
    if (sample.censored) {
      censored[i] = 1;
      return;
    }
    direct[i] = sample.l0_at_level.back();
    // Trapezoid of w(L(0, xi(u))) / w(u) over the level grid.
    double acc = 0.0;
    const double step = (a - b) / static_cast<double>(cfg.rho_grid - 1);
    for (std::uint64_t k = 0; k < cfg.rho_grid; ++k) {
      const double integrand = w(sample.l0_at_level[k]) / w(levels[k]);
      const double weight = (k == 0 || k + 1 == cfg.rho_grid) ? 0.5 * step : step;
      acc += weight * integrand;
    }
    quadrature[i] = a + acc;
  });

  // Replicas whose jump budget ran out never crossed the target level (the
  // strong regime can freeze the local time at 1 below it, so the crossing is
  // not almost sure). They are excluded from both estimators and disclosed;
  // dropping them removes the largest crossings, which only lowers the
  // surplus estimate.
  std::vector<double> done_direct, paired;
  done_direct.reserve(cfg.replicas);
  paired.reserve(cfg.replicas);
  for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
    if (censored[i]) continue;
    done_direct.push_back(direct[i]);
    paired.push_back(direct[i] - quadrature[i]);
  }
  if (done_direct.empty()) throw std::runtime_error("every surplus replica was censored");
  const auto direct_stats = stats::mean_stats(done_direct);
  const auto diff_stats = stats::mean_stats(paired);
  const auto n_censored = static_cast<std::uint64_t>(
      std::count(censored.begin(), censored.end(), std::uint8_t{1}));

  const double rho_hat = direct_stats.mean - a - (a - b);
  json report = {{"a", a},
                 {"b", b},
                 {"n_replicas", cfg.replicas},
                 {"completed_replicas", done_direct.size()},
                 {"censored_replicas", n_censored},
                 {"rho_hat", rho_hat},
                 {"stderr", direct_stats.se},
                 {"eq_mean_check",
                  {{"grid", levels},
                   {"lhs", direct_stats.mean},
                   {"rhs", direct_stats.mean - diff_stats.mean},
                   {"combined_se", diff_stats.se}}}};

  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i)
    replicas.push_back({{"replica", i},
                        {"l0_at_xi_a", direct[i]},
                        {"quadrature_m", quadrature[i]},
                        {"censored", censored[i] != 0}});
  merge_errors(replicas, errors);

  std::vector<Check> checks = {
      make_check("rho_surplus_over_3se", rho_hat - 3.0 * direct_stats.se, 0.0, "gt"),
      make_check("eq_mean_gap_over_3se",
                 std::abs(diff_stats.mean) - 3.0 * diff_stats.se, 0.0, "le")};
  return make_verdict(cfg, std::move(checks), std::move(replicas), std::move(report));
}

Verdict run_engine_comparison(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const VertexSet vset = cfg.vertex_set();
  std::vector<double> ref_pos(cfg.replicas), ref_l0(cfg.replicas);
  std::vector<double> can_pos(cfg.replicas), can_l0(cfg.replicas);

  const std::uint64_t ref_master = substream_seed(cfg.seed, "reference");
  const std::uint64_t can_master = substream_seed(cfg.seed, "canonical");
  const auto errors = ensemble::run_replicas(cfg.replicas, cfg.threads, [&](std::uint64_t i) {
    auto run_side = [&](std::uint64_t master, LatticeEngine::Law law, double& pos5, double& l0) {
      const ClockBank bank(replica_seed(master, i));
      LatticeEngine eng(w, vset, bank, law, cfg.ell_default);
      for (int jump = 1; jump <= 10; ++jump) {
        eng.step();
        if (jump == 5) pos5 = static_cast<double>(eng.current());
      }
      l0 = eng.local_time(0);
    };
    run_side(ref_master, LatticeEngine::Law::Reference, ref_pos[i], ref_l0[i]);
    run_side(can_master, LatticeEngine::Law::Canonical, can_pos[i], can_l0[i]);
  });
  for (const auto& e : errors)
    if (e) throw std::runtime_error("engine comparison replica failed: " + *e);

  const auto ks_pos = stats::ks_two_sample(ref_pos, can_pos, cfg.alpha);
  const auto ks_l0 = stats::ks_two_sample(ref_l0, can_l0, cfg.alpha);
  json report = {{"position_after_5", {{"d", ks_pos.d}, {"p", ks_pos.p}}},
                 {"local_time_0_after_10", {{"d", ks_l0.d}, {"p", ks_l0.p}}}};

  json replicas = json::array();
  for (std::uint64_t i = 0; i < cfg.replicas; ++i)
    replicas.push_back({{"replica", i},
                        {"ref_pos5", ref_pos[i]},
                        {"ref_l0_10", ref_l0[i]},
                        {"can_pos5", can_pos[i]},
                        {"can_l0_10", can_l0[i]}});

  std::vector<Check> checks = {make_check("ks_p_position", ks_pos.p, cfg.alpha, "ge"),
                               make_check("ks_p_local_time", ks_l0.p, cfg.alpha, "ge")};
  return make_verdict(cfg, std::move(checks), std::move(replicas), std::move(report));
}

Verdict run_diagnostics_suite(const ExperimentConfig& cfg) {
  const WeightFunction w = cfg.weight();
  const VertexSet pair = VertexSet::segment(0, 1);
  std::vector<Check> checks;
  json replicas = json::array();
  json report = json::object();

  // Decomposition residual and pathwise bounds on jump-budget runs.
  if (cfg.residual_runs > 0) {
    std::vector<double> residuals(cfg.residual_runs);
    std::vector<std::uint64_t> jump_viol(cfg.residual_runs), sandwich_viol(cfg.residual_runs),
        a_tail_viol(cfg.residual_runs);
    const std::uint64_t master = substream_seed(cfg.seed, "residual");
    const auto errors =
        ensemble::run_replicas(cfg.residual_runs, cfg.threads, [&](std::uint64_t i) {
          const ClockBank bank(replica_seed(master, i));
          process::SimulateOptions opts;
          opts.horizon = 0.0;
          opts.max_jumps = cfg.residual_jumps;
          const Trajectory traj = process::simulate(w, pair, bank, opts);
          const auto series = diagnostics::compute_series(traj, w);
          residuals[i] = diagnostics::decomposition_residual_relative(series);
          const auto bounds = diagnostics::pathwise_bound_checks(series);
          jump_viol[i] = bounds.jump_size_violations;
          sandwich_viol[i] = bounds.sandwich_violations;
          a_tail_viol[i] = bounds.a_tail_violations;
        });
    for (const auto& e : errors)
      if (e) throw std::runtime_error("residual replica failed: " + *e);

    double worst = 0.0;
    std::uint64_t jv = 0, sv = 0, av = 0;
    for (std::uint64_t i = 0; i < cfg.residual_runs; ++i) {
      worst = std::max(worst, residuals[i]);
      jv += jump_viol[i];
      sv += sandwich_viol[i];
      av += a_tail_viol[i];
      replicas.push_back({{"replica", i}, {"part", "residual"}, {"residual_rel", residuals[i]}});
    }
    checks.push_back(make_check("max_decomposition_residual", worst, cfg.residual_tol, "lt"));
    checks.push_back(make_check("jump_size_violations", static_cast<double>(jv), 0.0, "eq"));
    checks.push_back(make_check("sandwich_violations", static_cast<double>(sv), 0.0, "eq"));
    checks.push_back(make_check("a_tail_violations", static_cast<double>(av), 0.0, "eq"));
  }

  // Envelope bounds at random (t, s).
  if (cfg.envelope_evals > 0) {
    std::vector<std::uint8_t> lower_bad(cfg.envelope_evals, 0), upper_bad(cfg.envelope_evals, 0);
    std::vector<double> slack_lo(cfg.envelope_evals), slack_up(cfg.envelope_evals);
    const std::uint64_t master = substream_seed(cfg.seed, "envelope");
    const auto errors =
        ensemble::run_replicas(cfg.envelope_evals, cfg.threads, [&](std::uint64_t i) {
          const ClockBank bank(replica_seed(master, i));
          process::SimulateOptions opts;
          opts.horizon = cfg.envelope_horizon;
          opts.max_jumps = cfg.max_jumps;
          const Trajectory traj = process::simulate(w, pair, bank, opts);
          const std::uint64_t ts_key = substream_seed(bank.master_seed(), "ts");
          const double u1 = clocks::uniform_from_bits(clocks::stream_at(ts_key, 0));
          const double u2 = clocks::uniform_from_bits(clocks::stream_at(ts_key, 1));
          const double t = std::min(u1, u2) * traj.horizon;
          const double s = std::max(u1, u2) * traj.horizon;
          const auto env = diagnostics::envelope_checks(traj, w, t, s);
          lower_bad[i] = env.lower_ok ? 0 : 1;
          upper_bad[i] = env.upper_ok ? 0 : 1;
          slack_lo[i] = env.slack_lower;
          slack_up[i] = env.slack_upper;
        });
    for (const auto& e : errors)
      if (e) throw std::runtime_error("envelope replica failed: " + *e);

    std::uint64_t lo = 0, up = 0;
    for (std::uint64_t i = 0; i < cfg.envelope_evals; ++i) {
      lo += lower_bad[i];
      up += upper_bad[i];
      replicas.push_back({{"replica", i},
                          {"part", "envelope"},
                          {"slack_lower", slack_lo[i]},
                          {"slack_upper", slack_up[i]}});
    }
    checks.push_back(make_check("envelope_lower_violations", static_cast<double>(lo), 0.0, "eq"));
    checks.push_back(make_check("envelope_upper_violations", static_cast<double>(up), 0.0, "eq"));
  }

  // Martingale checkpoints.
  if (cfg.martingale_runs > 0) {
    if (cfg.martingale_runs < 1000)
      throw std::invalid_argument("martingale checks need at least 1000 runs");
    double h_max = 0.0;
    for (double h : cfg.drift_steps) h_max = std::max(h_max, h);
    const double horizon = cfg.checkpoints.back() + h_max;

    diagnostics::MartingaleSamples samples;
    samples.m.assign(cfg.checkpoints.size(), std::vector<double>(cfg.martingale_runs));
    samples.q.assign(cfg.checkpoints.size(), std::vector<double>(cfg.martingale_runs));
    samples.drift.assign(cfg.checkpoints.size() * cfg.drift_steps.size(),
                         std::vector<double>(cfg.martingale_runs));
    const std::uint64_t master = substream_seed(cfg.seed, "martingale");
    const auto errors =
        ensemble::run_replicas(cfg.martingale_runs, cfg.threads, [&](std::uint64_t i) {
          const ClockBank bank(replica_seed(master, i));
          process::SimulateOptions opts;
          opts.horizon = horizon;
          opts.max_jumps = cfg.max_jumps;
          const Trajectory traj = process::simulate(w, pair, bank, opts);
          diagnostics::extract_martingale_samples(traj, w, cfg.checkpoints, cfg.drift_steps,
                                                  samples, i);
        });
    for (const auto& e : errors)
      if (e) throw std::runtime_error("martingale replica failed: " + *e);

    const auto mr = diagnostics::reduce_martingale(cfg.checkpoints, cfg.drift_steps, samples);
    json jmart = json::array();
    for (const auto& cp : mr.checkpoints) {
      jmart.push_back({{"t", cp.t},
                       {"mean_m", cp.m.mean},
                       {"se_m", cp.m.se},
                       {"mean_m2_minus_angle", cp.m2_minus_angle.mean},
                       {"se_m2_minus_angle", cp.m2_minus_angle.se}});
      const std::string t_str = io::format_double(cp.t);
      checks.push_back(make_check("martingale_mean_t" + t_str,
                                  std::abs(cp.m.mean) - 3.0 * cp.m.se, 0.0, "le"));
      checks.push_back(make_check(
          "martingale_isometry_t" + t_str,
          std::abs(cp.m2_minus_angle.mean) - 3.0 * cp.m2_minus_angle.se, 0.0, "le"));
    }
    json jdrift = json::array();
    for (const auto& d : mr.drifts)
      jdrift.push_back({{"t", d.t},
                        {"h", d.h},
                        {"mean", d.resid.mean},
                        {"se", d.resid.se},
                        {"ratio", d.ratio}});
    checks.push_back(make_check("drift_ratio_shrinks", mr.drift_ok ? 1.0 : 0.0, 1.0, "eq"));
    report["martingale"] = jmart;
    report["drift"] = jdrift;
    for (std::uint64_t i = 0; i < cfg.martingale_runs; ++i) {
      json row = {{"replica", i}, {"part", "martingale"}};
      for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
        const std::string t_str = io::format_double(cfg.checkpoints[c]);
        row["m_t" + t_str] = samples.m[c][i];
        row["q_t" + t_str] = samples.q[c][i];
      }
      replicas.push_back(std::move(row));
    }
  }

  return make_verdict(cfg, std::move(checks), std::move(replicas), std::move(report));
}

}  // namespace

Verdict run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case Kind::Localization:
      return run_localization(cfg);
    case Kind::Recurrence:
      return run_recurrence(cfg);
    case Kind::Nontransience:
      return run_nontransience(cfg);
    case Kind::TwoVertexWeak:
      return run_two_vertex_weak(cfg);
    case Kind::TwoVertexStrong:
      return run_two_vertex_strong(cfg);
    case Kind::CouplingDomination:
      return run_coupling_domination(cfg);
    case Kind::CouplingDistribution:
      return run_coupling_distribution(cfg);
    case Kind::RhoSurplus:
      return run_rho_surplus(cfg);
    case Kind::EngineComparison:
      return run_engine_comparison(cfg);
    case Kind::DiagnosticsSuite:
      return run_diagnostics_suite(cfg);
  }
  throw std::logic_error("unhandled experiment kind");
}

void write_artifacts(const Verdict& verdict, const std::filesystem::path& out_dir) {
  io::atomic_write(out_dir / "verdict.json", verdict.to_json().dump(2) + "\n");

  // Per-replica summary CSV: columns from the union of record keys.
  std::set<std::string> keys;
  for (const auto& row : verdict.replicas)
    for (const auto& [k, v] : row.items()) keys.insert(k);
  std::string csv;
  bool first = true;
  for (const auto& k : keys) {
    if (!first) csv += ',';
    csv += k;
    first = false;
  }
  csv += '\n';
  for (const auto& row : verdict.replicas) {
    first = true;
    for (const auto& k : keys) {
      if (!first) csv += ',';
      first = false;
      if (!row.contains(k)) continue;
      const auto& v = row.at(k);
      if (v.is_number_float())
        csv += io::format_double(v.get<double>());
      else if (v.is_string())
        csv += v.get<std::string>();
      else
        csv += v.dump();
    }
    csv += '\n';
  }
  io::atomic_write(out_dir / "replicas.csv", csv);
}

}  // namespace vrjp::experiments
