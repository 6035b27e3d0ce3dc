#pragma once

// Shared-clock machinery: the indexed-clock engine with its jump-count state,
// coupled two-vertex pairs driven by one clock bank, and the level-crossing
// primitives used by the first-mover-advantage estimates.

#include "vrjp/process.hpp"
#include "vrjp/two_vertex.hpp"

#include <optional>
#include <span>
#include <vector>

namespace vrjp::coupling {

using clocks::ClockBank;
using clocks::DirectedEdge;
using process::Event;
using process::Trajectory;
using process::VertexSet;
using weights::WeightFunction;

// The indexed-clock construction: per-directed-edge clocks consumed in jump
// order, losers keeping their surviving hazard. Two engines registered on the
// same bank read identical clock values at identical indices.
class CanonicalEngine : public process::LatticeEngine {
 public:
  CanonicalEngine(const WeightFunction& w, const VertexSet& vs, const ClockBank& bank,
                  double ell_default = 1.0, const std::map<std::int64_t, double>& ell_override = {})
      : LatticeEngine(w, vs, bank, Law::Canonical, ell_default, ell_override) {}
};

// Aligned local-time sequences of two processes on {0,1} consuming the same
// clock streams: `tilde` starts from (1,1), `star` from (1, 1+A) with A an
// independent Exp(1) drawn from the bank's "A" substream. Index k holds the
// values at each process's own k-th jump time, k = 1..n.
struct CoupledPaths {
  std::vector<double> tilde_l0, tilde_l1, star_l0, star_l1;
  double a_value = 0.0;
};

// forced_a overrides the exponential draw (test hook; 0 makes the processes
// coincide path for path).
CoupledPaths run_coupled_pair(const WeightFunction& w, const ClockBank& bank,
                              std::uint64_t n_jumps, std::optional<double> forced_a = {});

struct Hitting {
  double time = 0.0;
  bool censored = false;
};

// First time the local time at vertex i reaches `threshold`; exact piecewise
// linear inversion within the crossing sojourn. Censored when the horizon
// ends first.
Hitting hitting_time_eta(const Trajectory& traj, std::int64_t i, double threshold);

struct Crossing {
  double time = 0.0;         // xi(a)
  double l0_at_crossing = 0.0;  // L(0, xi(a))
  bool censored = false;
};

// First time the local time at vertex 1 reaches `a`, for a two-vertex
// trajectory started at 0, together with the frozen local time at 0.
Crossing xi_crossing(const Trajectory& traj, double a);

// Fast path for the surplus experiments: runs a fresh two-vertex process with
// initial local times (ell0, ell1) until the local time at 1 reaches
// levels.back(), recording L(0, xi(u)) at every level u (ascending).
struct XiLevelSample {
  std::vector<double> l0_at_level;
  bool censored = false;
};
XiLevelSample xi_levels(const WeightFunction& w, const ClockBank& bank, double ell0, double ell1,
                        std::span<const double> levels, std::uint64_t max_jumps = 10'000'000);

}  // namespace vrjp::coupling
