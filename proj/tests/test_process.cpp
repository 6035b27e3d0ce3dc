#include "vrjp/process.hpp"

#include "vrjp/coupling.hpp"
#include "vrjp/stats.hpp"
#include "vrjp/two_vertex.hpp"

#include <doctest.h>

#include <cmath>

using namespace vrjp;
using clocks::ClockBank;
using process::LatticeEngine;
using process::SimulateOptions;
using process::Trajectory;
using process::VertexSet;
using weights::WeightFunction;

namespace {
constexpr std::uint64_t kSeed = 0x9a17c3u;

Trajectory two_vertex_run(const WeightFunction& w, std::uint64_t seed, double horizon) {
  SimulateOptions opts;
  opts.horizon = horizon;
  return simulate(w, VertexSet::segment(0, 1), ClockBank(seed), opts);
}

double conservation_gap(const Trajectory& traj) {
  std::int64_t lo = traj.start, hi = traj.start;
  for (const auto& ev : traj.events) {
    lo = std::min(lo, std::min(ev.from, ev.to));
    hi = std::max(hi, std::max(ev.from, ev.to));
  }
  double sum = 0.0;
  for (std::int64_t v = lo; v <= hi; ++v)
    sum += traj.local_time(v, traj.horizon) - traj.ell(v);
  return std::abs(sum - traj.horizon);
}

}  // namespace

TEST_CASE("vertex sets: membership, start rules, degenerate inputs") {
  const auto full = VertexSet::full_line();
  CHECK(full.contains(-1000000));
  CHECK(full.start_vertex() == 0);

  const auto half = VertexSet::half_line_plus();
  CHECK(half.contains(0));
  CHECK_FALSE(half.contains(-1));
  CHECK(half.start_vertex() == 0);

  CHECK(VertexSet::segment(2, 5).start_vertex() == 2);
  CHECK(VertexSet::segment(-5, -2).start_vertex() == -2);
  CHECK(VertexSet::segment(-3, 4).start_vertex() == 0);
  CHECK_THROWS_AS(VertexSet::segment(3, 3), std::invalid_argument);
  CHECK_THROWS_AS(VertexSet::mask({0, 2, 3}), std::invalid_argument);
  CHECK(VertexSet::mask({3, 1, 2}).start_vertex() == 1);
  CHECK(full.covers(VertexSet::segment(-7, 9)));
  CHECK_FALSE(VertexSet::segment(0, 5).covers(VertexSet::segment(4, 6)));
}

TEST_CASE("single-neighbour sojourn equals the raw clock value") {
  const ClockBank bank(kSeed);
  const auto w = WeightFunction::power(2.0);
  process::TwoVertexProcess p(w, bank);
  const double chi = bank.exponential({0, 1}, 1);
  CHECK(p.next_jump_time() == chi);  // w(1) = 1 exactly
  p.step();
  CHECK(p.at() == 1);
  CHECK(p.local_time(0) == 1.0 + chi);
}

TEST_CASE("competing clocks pick the smaller scaled wait") {
  const ClockBank bank(kSeed);
  const auto w = WeightFunction::power(2.0);
  // Pinned neighbour local times: L(-1) = 1, L(1) = 2.
  LatticeEngine eng(w, VertexSet::full_line(), bank, LatticeEngine::Law::Reference, 1.0,
                    {{1, 2.0}});
  const double wait_left = bank.exponential({0, -1}, 1) / w(1.0);
  const double wait_right = bank.exponential({0, 1}, 1) / w(2.0);
  const auto ev = eng.step();
  CHECK(ev.tau == std::min(wait_left, wait_right));
  CHECK(ev.to == (wait_right < wait_left ? 1 : -1));
}

TEST_CASE("first two-vertex sojourn follows the unit-exponential law") {
  // With w(1) = 1 the first sojourn at 0 is the raw clock value; its law over
  // independent replicas must be Exp(1).
  const auto w = WeightFunction::power(2.0);
  std::vector<double> sojourns(100'000);
  for (std::size_t i = 0; i < sojourns.size(); ++i) {
    const ClockBank bank(clocks::replica_seed(kSeed ^ 0x50f, i));
    process::TwoVertexProcess p(w, bank);
    sojourns[i] = p.next_jump_time();
  }
  const auto ks = vrjp::stats::ks_one_sample(sojourns, vrjp::stats::exp1_cdf, 0.001);
  CHECK_FALSE(ks.reject);
}

TEST_CASE("first jump from a symmetric start is a fair coin") {
  const auto w = WeightFunction::power(2.0);
  std::size_t right = 0;
  const std::size_t n = 100'000;
  for (std::size_t i = 0; i < n; ++i) {
    const ClockBank bank(clocks::replica_seed(kSeed, i));
    if (bank.exponential({0, 1}, 1) < bank.exponential({0, -1}, 1)) ++right;
  }
  (void)w;
  const double frac = static_cast<double>(right) / static_cast<double>(n);
  CHECK(std::abs(frac - 0.5) < 0.005);
}

TEST_CASE("pinned-state direction law matches the weight ratio") {
  // From 0 with L(-1) = 1, L(1) = 2 and quadratic weight: P(right) = 4/5.
  const auto w = WeightFunction::power(2.0);
  std::size_t right = 0;
  const std::size_t n = 100'000;
  for (std::size_t i = 0; i < n; ++i) {
    const ClockBank bank(clocks::replica_seed(kSeed ^ 0xabc, i));
    LatticeEngine eng(w, VertexSet::full_line(), bank, LatticeEngine::Law::Reference, 1.0,
                      {{1, 2.0}});
    if (eng.step().to == 1) ++right;
  }
  const double frac = static_cast<double>(right) / static_cast<double>(n);
  CHECK(std::abs(frac - 0.8) < 0.004);  // 3 sigma ~ 0.0038
}

TEST_CASE("two-vertex runs alternate and conserve time") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto traj = two_vertex_run(WeightFunction::linear(), kSeed + s, 50.0);
    std::int64_t pos = traj.start;
    double prev = -1.0;
    for (const auto& ev : traj.events) {
      CHECK(ev.from == pos);
      CHECK(ev.to == 1 - pos);
      CHECK(ev.tau > prev);
      prev = ev.tau;
      pos = ev.to;
    }
    CHECK(conservation_gap(traj) <= 1e-9 * traj.horizon);
  }
}

TEST_CASE("full-line runs conserve time and stay nearest-neighbour") {
  SimulateOptions opts;
  opts.horizon = 200.0;
  const auto traj =
      simulate(WeightFunction::linear(), VertexSet::full_line(), ClockBank(kSeed), opts);
  std::int64_t pos = traj.start;
  for (const auto& ev : traj.events) {
    CHECK(ev.from == pos);
    CHECK(std::abs(ev.to - ev.from) == 1);
    pos = ev.to;
  }
  CHECK(conservation_gap(traj) <= 1e-9 * traj.horizon);

  // Canonical law obeys the same bookkeeping.
  opts.engine = SimulateOptions::Engine::Canonical;
  const auto canon =
      simulate(WeightFunction::power(2.0), VertexSet::full_line(), ClockBank(kSeed), opts);
  CHECK(conservation_gap(canon) <= 1e-9 * canon.horizon);
}

TEST_CASE("local time queries") {
  Trajectory traj;
  traj.vset = VertexSet::segment(0, 1);
  traj.start = 0;
  traj.events = {{0.3, 0, 1}};
  traj.horizon = 1.0;
  CHECK(traj.local_time(0, 0.0) == 1.0);
  CHECK(traj.local_time(0, 0.5) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(traj.local_time(1, 0.5) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(traj.local_time(5, 1.0) == 1.0);
  CHECK_THROWS_AS(traj.local_time(0, 1.5), std::out_of_range);
  CHECK_THROWS_AS(traj.local_time(0, -0.1), std::out_of_range);

  const auto run = two_vertex_run(WeightFunction::power(2.0), kSeed + 7, 30.0);
  for (int k = 0; k < 20; ++k) {
    const double t = run.horizon * static_cast<double>(k) / 19.0;
    const double total = run.local_time(0, t) - 1.0 + run.local_time(1, t) - 1.0;
    CHECK(std::abs(total - t) <= 1e-9 * std::max(1.0, t));
  }
}

TEST_CASE("jump budget stops the run and flags it") {
  SimulateOptions opts;
  opts.horizon = 1e9;
  opts.max_jumps = 25;
  const auto traj =
      simulate(WeightFunction::linear(), VertexSet::segment(0, 1), ClockBank(kSeed), opts);
  CHECK(traj.events.size() == 25);
  CHECK(traj.max_jumps_hit);
  CHECK(traj.horizon == traj.events.back().tau);
  CHECK(conservation_gap(traj) <= 1e-9 * std::max(1.0, traj.horizon));
}

TEST_CASE("restriction: identity and hand-built time change") {
  const auto run = two_vertex_run(WeightFunction::linear(), kSeed, 25.0);
  const auto ident = process::restrict(run, VertexSet::segment(0, 1));
  CHECK(ident.time_in_b == run.horizon);
  CHECK(ident.traj.events.size() == run.events.size());
  for (std::size_t i = 0; i < run.events.size(); ++i)
    CHECK(ident.traj.events[i] == run.events[i]);

  Trajectory path;
  path.vset = VertexSet::segment(0, 2);
  path.start = 0;
  path.events = {{1.0, 0, 1}, {2.0, 1, 2}, {3.0, 2, 1}};
  path.horizon = 4.0;
  const auto cut = process::restrict(path, VertexSet::segment(0, 1));
  CHECK(cut.time_in_b == doctest::Approx(3.0).epsilon(1e-15));
  REQUIRE(cut.traj.events.size() == 1);
  CHECK(cut.traj.events[0].tau == 1.0);
  CHECK(cut.traj.events[0].from == 0);
  CHECK(cut.traj.events[0].to == 1);
  CHECK(cut.traj.local_time(1, cut.traj.horizon) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(cut.censored);

  CHECK_THROWS_AS(process::restrict(cut.traj, VertexSet::segment(0, 5)), std::invalid_argument);
}

TEST_CASE("restriction principle: canonical full run vs shared-bank extension") {
  const auto w = WeightFunction::power(2.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ClockBank bank(clocks::replica_seed(kSeed ^ 0x57a, s));
    SimulateOptions opts;
    opts.horizon = 40.0;
    opts.engine = SimulateOptions::Engine::Canonical;
    const auto full = simulate(w, VertexSet::half_line_plus(), bank, opts);

    for (std::int64_t hi : {1, 2, 5}) {
      const auto b = VertexSet::segment(0, hi);
      const auto restricted = process::restrict(full, b);

      SimulateOptions ext_opts;
      ext_opts.horizon = restricted.time_in_b;
      ext_opts.engine = SimulateOptions::Engine::Canonical;
      const auto extension = simulate(w, b, bank, ext_opts);

      REQUIRE(extension.events.size() == restricted.traj.events.size());
      for (std::size_t k = 0; k < extension.events.size(); ++k) {
        CHECK(extension.events[k].from == restricted.traj.events[k].from);
        CHECK(extension.events[k].to == restricted.traj.events[k].to);
        CHECK(std::abs(extension.events[k].tau - restricted.traj.events[k].tau) <=
              1e-9 * std::max(1.0, restricted.time_in_b));
      }
    }
  }
}

TEST_CASE("reference and canonical laws coincide on the two-vertex chain") {
  const auto w = WeightFunction::exp_shifted(1.0);
  const ClockBank bank(kSeed + 11);
  SimulateOptions ref_opts;
  ref_opts.horizon = 20.0;
  const auto ref = simulate(w, VertexSet::segment(0, 1), bank, ref_opts);
  ref_opts.engine = SimulateOptions::Engine::Canonical;
  const auto canon = simulate(w, VertexSet::segment(0, 1), bank, ref_opts);
  REQUIRE(ref.events.size() == canon.events.size());
  for (std::size_t i = 0; i < ref.events.size(); ++i) CHECK(ref.events[i] == canon.events[i]);

  // The specialised kernel walks the same path bit for bit.
  process::TwoVertexProcess kernel(w, bank);
  for (const auto& ev : ref.events) {
    CHECK(kernel.next_jump_time() == ev.tau);
    CHECK(kernel.at() == ev.from);
    kernel.step();
  }
}

TEST_CASE("full trajectory reproducibility from equal seed and config") {
  SimulateOptions opts;
  opts.horizon = 60.0;
  const auto a = simulate(WeightFunction::power(2.0), VertexSet::full_line(), ClockBank(42), opts);
  const auto b = simulate(WeightFunction::power(2.0), VertexSet::full_line(), ClockBank(42), opts);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) CHECK(a.events[i] == b.events[i]);
}
