#include "vrjp/coupling.hpp"

#include <cmath>
#include <stdexcept>

namespace vrjp::coupling {

CoupledPaths run_coupled_pair(const WeightFunction& w, const ClockBank& bank,
                              std::uint64_t n_jumps, std::optional<double> forced_a) {
  if (n_jumps == 0) throw std::invalid_argument("coupled pair needs n_jumps >= 1");
  const double a = forced_a ? *forced_a
                            : clocks::ExpStream(clocks::substream_seed(bank.master_seed(), "A"))(0);

  process::TwoVertexProcess tilde(w, bank, 1.0, 1.0, 0);
  process::TwoVertexProcess star(w, bank, 1.0, 1.0 + a, 0);

  CoupledPaths out;
  out.a_value = a;
  out.tilde_l0.reserve(n_jumps);
  out.tilde_l1.reserve(n_jumps);
  out.star_l0.reserve(n_jumps);
  out.star_l1.reserve(n_jumps);
  for (std::uint64_t k = 0; k < n_jumps; ++k) {
    tilde.step();
    star.step();
    out.tilde_l0.push_back(tilde.local_time(0));
    out.tilde_l1.push_back(tilde.local_time(1));
    out.star_l0.push_back(star.local_time(0));
    out.star_l1.push_back(star.local_time(1));
  }
  return out;
}

Hitting hitting_time_eta(const Trajectory& traj, std::int64_t i, double threshold) {
  if (!(threshold >= 1.0)) throw std::invalid_argument("threshold must be >= 1");
  double level = traj.ell(i);
  if (threshold <= level) return {0.0, false};

  std::int64_t pos = traj.start;
  double prev = 0.0;
  auto cross_within = [&](double seg_end) -> std::optional<double> {
    if (pos != i) return std::nullopt;
    const double gained = seg_end - prev;
    if (level + gained >= threshold) return prev + (threshold - level);
    level += gained;
    return std::nullopt;
  };

  for (const Event& ev : traj.events) {
    if (auto t = cross_within(ev.tau)) return {*t, false};
    pos = ev.to;
    prev = ev.tau;
  }
  if (auto t = cross_within(traj.horizon)) return {*t, false};
  return {traj.horizon, true};
}

Crossing xi_crossing(const Trajectory& traj, double a) {
  const double ell1 = traj.ell(1);
  if (!(a >= ell1))
    throw std::invalid_argument("crossing level must be at least the initial local time at 1");
  if (a == ell1) return {0.0, traj.ell(0), false};

  double l0 = traj.ell(0);
  double l1 = ell1;
  std::int64_t pos = traj.start;
  double prev = 0.0;
  auto cross_within = [&](double seg_end) -> std::optional<Crossing> {
    const double gained = seg_end - prev;
    if (pos == 1) {
      if (l1 + gained >= a) return Crossing{prev + (a - l1), l0, false};
      l1 += gained;
    } else if (pos == 0) {
      l0 += gained;
    }
    return std::nullopt;
  };

  for (const Event& ev : traj.events) {
    if (auto c = cross_within(ev.tau)) return *c;
    pos = ev.to;
    prev = ev.tau;
  }
  if (auto c = cross_within(traj.horizon)) return *c;
  return {traj.horizon, l0, true};
}

XiLevelSample xi_levels(const WeightFunction& w, const ClockBank& bank, double ell0, double ell1,
                        std::span<const double> levels, std::uint64_t max_jumps) {
  if (levels.empty()) throw std::invalid_argument("xi_levels needs at least one level");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(levels[k] >= ell1)) throw std::invalid_argument("levels must be >= the initial local time at 1");
    if (k > 0 && !(levels[k] >= levels[k - 1]))
      throw std::invalid_argument("levels must be ascending");
  }

  process::TwoVertexProcess p(w, bank, ell0, ell1, 0);
  XiLevelSample out;
  out.l0_at_level.reserve(levels.size());
  std::size_t next = 0;
  while (next < levels.size() && levels[next] <= ell1) {
    out.l0_at_level.push_back(ell0);  // already attained at time zero
    ++next;
  }
  std::uint64_t steps = 0;
  while (next < levels.size() && steps < max_jumps) {
    const double l1_before = p.local_time(1);
    const double l0_now = p.local_time(0);
    if (p.at() == 1) {
      const double t_next = p.next_jump_time();
      const double l1_after = l1_before + (t_next - p.time());
      while (next < levels.size() && levels[next] <= l1_after) {
        out.l0_at_level.push_back(l0_now);
        ++next;
      }
      if (next == levels.size()) break;
    }
    p.step();
    ++steps;
  }
  out.censored = next < levels.size();
  out.l0_at_level.resize(levels.size(), std::numeric_limits<double>::quiet_NaN());
  return out;
}

}  // namespace vrjp::coupling
