#include "vrjp/process.hpp"

#include <cmath>

namespace vrjp::process {

std::int64_t Trajectory::vertex_at(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("query time outside [0, horizon]");
  std::int64_t pos = start;
  for (const Event& ev : events) {
    if (ev.tau > t) break;
    pos = ev.to;
  }
  return pos;
}

double Trajectory::local_time(std::int64_t x, double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("query time outside [0, horizon]");
  double acc = ell(x);
  std::int64_t pos = start;
  double prev = 0.0;
  for (const Event& ev : events) {
    const double end = std::min(ev.tau, t);
    if (end > prev && pos == x) acc += end - prev;
    if (ev.tau >= t) return acc;
    pos = ev.to;
    prev = ev.tau;
  }
  if (t > prev && pos == x) acc += t - prev;
  return acc;
}

Trajectory simulate(const WeightFunction& w, const VertexSet& vs, const ClockBank& bank,
                    const SimulateOptions& opts) {
  if (!(opts.horizon > 0.0) && opts.max_jumps == 0)
    throw std::invalid_argument("simulate needs a positive horizon or a jump budget");
  const double horizon = opts.horizon > 0.0 ? opts.horizon : weights::kInf;

  const auto law = opts.engine == SimulateOptions::Engine::Canonical
                       ? LatticeEngine::Law::Canonical
                       : LatticeEngine::Law::Reference;
  LatticeEngine engine(w, vs, bank, law, opts.ell_default, opts.ell_override);

  Trajectory traj;
  traj.vset = vs;
  traj.start = engine.current();
  traj.ell_default = opts.ell_default;
  traj.ell_override = opts.ell_override;
  traj.seed = bank.master_seed();

  const std::uint64_t done = engine.run_until(
      horizon, opts.max_jumps,
      [&](double tau, std::int64_t from, std::int64_t to) { traj.events.push_back({tau, from, to}); });

  if (done == opts.max_jumps && (!std::isfinite(horizon) || engine.peek().tau < horizon)) {
    // Jump budget exhausted first: accounting stops at the last committed
    // event so time conservation stays exact. Flag it when a time horizon
    // was actually requested.
    traj.max_jumps_hit = std::isfinite(horizon);
    traj.horizon = engine.time();
  } else {
    traj.horizon = horizon;
  }
  return traj;
}

Restricted restrict(const Trajectory& traj, const VertexSet& b) {
  if (!traj.vset.covers(b))
    throw std::invalid_argument("restriction set must lie inside the trajectory's vertex set");

  Restricted out;
  out.traj.vset = b;
  out.traj.ell_default = traj.ell_default;
  for (const auto& [v, l] : traj.ell_override)
    if (b.contains(v)) out.traj.ell_override[v] = l;
  out.traj.seed = traj.seed;
  out.traj.config_digest = traj.config_digest;

  std::int64_t pos = traj.start;
  bool entered = b.contains(pos);
  std::int64_t first_inside = entered ? pos : b.start_vertex();
  double watched = 0.0;
  double prev = 0.0;
  for (const Event& ev : traj.events) {
    if (b.contains(pos)) watched += ev.tau - prev;
    if (b.contains(ev.from) && b.contains(ev.to)) {
      out.traj.events.push_back({watched, ev.from, ev.to});
      if (!entered) {
        entered = true;
        first_inside = ev.from;
      }
    } else if (!entered && b.contains(ev.to)) {
      entered = true;
      first_inside = ev.to;
    }
    pos = ev.to;
    prev = ev.tau;
  }
  if (b.contains(pos)) watched += traj.horizon - prev;

  out.traj.start = first_inside;
  out.traj.horizon = watched;
  out.time_in_b = watched;
  out.censored = true;  // a finite-horizon run can only bound the true exit time
  return out;
}

}  // namespace vrjp::process
