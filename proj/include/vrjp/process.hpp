#pragma once

// Event-driven simulation of the reinforced jump process on connected subsets
// of the integer line.
//
// Two stepping laws are provided by the same engine:
//  - Reference: every sojourn races one fresh Exp(1) clock per in-set
//    neighbour, divided by the neighbour's current weight. This realises the
//    conditional jump intensity directly.
//  - Canonical: clocks are indexed per directed edge and consumed in order;
//    a clock that loses a race keeps its surviving hazard, so the same draw
//    is continued (not re-read in full) at later visits. Edge-indexed clocks
//    are what make coupled runs and restrictions line up path by path.
//
// On the two-vertex chain each sojourn has a single candidate edge, so the
// two laws produce bit-identical trajectories from the same clock bank.

#include "vrjp/clocks.hpp"
#include "vrjp/weights.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrjp::process {

using clocks::ClockBank;
using clocks::DirectedEdge;
using weights::WeightFunction;

// Connected non-empty subsets of the integer line are exactly the integer
// intervals; unbounded ends are open. At least two vertices are required
// (a lone vertex can never jump).
class VertexSet {
 public:
  enum class Kind { FullLine, HalfLinePlus, Segment, Mask };

  static VertexSet full_line() { return VertexSet(Kind::FullLine, std::nullopt, std::nullopt); }

  // Non-negative integers {0, 1, 2, ...}.
  static VertexSet half_line_plus() { return VertexSet(Kind::HalfLinePlus, 0, std::nullopt); }

  static VertexSet segment(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) throw std::invalid_argument("segment needs at least two vertices (hi > lo)");
    return VertexSet(Kind::Segment, lo, hi);
  }

  // Explicit vertex list; must form a block of consecutive integers.
  static VertexSet mask(std::vector<std::int64_t> vertices) {
    if (vertices.size() < 2) throw std::invalid_argument("mask needs at least two vertices");
    std::sort(vertices.begin(), vertices.end());
    for (std::size_t i = 1; i < vertices.size(); ++i)
      if (vertices[i] != vertices[i - 1] + 1)
        throw std::invalid_argument("mask vertices must be connected");
    return VertexSet(Kind::Mask, vertices.front(), vertices.back());
  }

  Kind kind() const noexcept { return kind_; }
  std::optional<std::int64_t> lo() const noexcept { return lo_; }
  std::optional<std::int64_t> hi() const noexcept { return hi_; }

  bool contains(std::int64_t v) const noexcept {
    if (lo_ && v < *lo_) return false;
    if (hi_ && v > *hi_) return false;
    return true;
  }

  bool bounded() const noexcept { return lo_.has_value() && hi_.has_value(); }

  // Start rule: 0 when in the set, else the end closest to 0.
  std::int64_t start_vertex() const noexcept {
    if (contains(0)) return 0;
    if (lo_ && *lo_ > 0) return *lo_;
    return *hi_;
  }

  // True when `inner` is contained in this set.
  bool covers(const VertexSet& inner) const noexcept {
    const std::int64_t in_lo = inner.lo_ ? *inner.lo_ : std::numeric_limits<std::int64_t>::min();
    const std::int64_t in_hi = inner.hi_ ? *inner.hi_ : std::numeric_limits<std::int64_t>::max();
    return contains(in_lo) && contains(in_hi);
  }

  friend bool operator==(const VertexSet& a, const VertexSet& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  VertexSet(Kind k, std::optional<std::int64_t> lo, std::optional<std::int64_t> hi)
      : kind_(k), lo_(lo), hi_(hi) {}

  Kind kind_;
  std::optional<std::int64_t> lo_, hi_;
};

struct Event {
  double tau = 0.0;
  std::int64_t from = 0;
  std::int64_t to = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

// Complete sample path of one run: ordered jumps plus everything needed to
// reconstruct local times exactly.
struct Trajectory {
  VertexSet vset = VertexSet::full_line();
  std::int64_t start = 0;
  double ell_default = 1.0;
  std::map<std::int64_t, double> ell_override;
  std::vector<Event> events;
  double horizon = 0.0;
  bool max_jumps_hit = false;
  std::uint64_t seed = 0;
  std::string config_digest;

  double ell(std::int64_t x) const {
    auto it = ell_override.find(x);
    return it == ell_override.end() ? ell_default : it->second;
  }

  // Occupied vertex at time t (cadlag: the post-jump vertex at a jump time).
  std::int64_t vertex_at(double t) const;

  // L(x, t): initial value plus occupation time of x up to t. 0 <= t <= horizon.
  double local_time(std::int64_t x, double t) const;

  double total_clock_time() const { return horizon; }
};

struct SimulateOptions {
  double horizon = 0.0;
  std::uint64_t max_jumps = 10'000'000;
  double ell_default = 1.0;
  std::map<std::int64_t, double> ell_override;
  enum class Engine { Reference, Canonical } engine = Engine::Reference;
};

// ---------------------------------------------------------------------------
// Lattice engine
// ---------------------------------------------------------------------------

class LatticeEngine {
 public:
  enum class Law { Reference, Canonical };

  LatticeEngine(const WeightFunction& w, const VertexSet& vs, const ClockBank& bank, Law law,
                double ell_default = 1.0, const std::map<std::int64_t, double>& ell_override = {})
      : w_(w), vset_(vs), bank_(&bank), law_(law), ell_default_(ell_default) {
    if (!(ell_default >= 1.0))
      throw std::invalid_argument("initial local times must be >= 1");
    for (const auto& [v, l] : ell_override) {
      if (!(l >= 1.0)) throw std::invalid_argument("initial local times must be >= 1");
      if (!vset_.contains(v))
        throw std::invalid_argument("initial local time override outside the vertex set");
      ell_override_[v] = l;
    }
    current_ = vset_.start_vertex();
    visited_min_ = visited_max_ = current_;
    win_lo_ = current_;
    cells_.push_back(make_cell(current_));
    ensure_neighbourhood(current_);
  }

  double time() const noexcept { return t_; }
  std::int64_t current() const noexcept { return current_; }
  std::uint64_t jumps() const noexcept { return jumps_; }

  std::int64_t visited_min() const noexcept { return visited_min_; }
  std::int64_t visited_max() const noexcept { return visited_max_; }

  // Local time at the last committed event time.
  double local_time(std::int64_t v) const {
    if (v < win_lo_ || v >= win_lo_ + static_cast<std::int64_t>(cells_.size()))
      return default_ell(v);
    return cells_[static_cast<std::size_t>(v - win_lo_)].local;
  }

  // Local time at a query time inside the pending sojourn:
  // time() <= t <= next event time.
  double local_time_at(std::int64_t v, double t) const {
    const double base = local_time(v);
    return v == current_ ? base + (t - t_) : base;
  }

  // Current clock index for a directed edge: 1 + number of jumps taken along
  // it. Canonical law only.
  std::uint64_t gamma(const DirectedEdge& e) const {
    if (law_ != Law::Canonical) throw std::logic_error("gamma is defined for the canonical law");
    clocks::validate(e);
    if (e.from < win_lo_ || e.from >= win_lo_ + static_cast<std::int64_t>(cells_.size())) return 1;
    const Cell& c = cells_[static_cast<std::size_t>(e.from - win_lo_)];
    return c.clock_index[e.to > e.from ? 1 : 0];
  }

  // Advances until the next jump would land at or after `t_stop`, or until
  // `max_events` jumps have been committed. The in-progress sojourn survives
  // truncation and resumes on the next call. Returns the number of jumps
  // committed. on_event(tau, from, to) fires after each commit.
  template <class OnEvent>
  std::uint64_t run_until(double t_stop, std::uint64_t max_events, OnEvent&& on_event) {
    std::uint64_t done = 0;
    while (done < max_events) {
      if (!pending_) compute_pending();
      if (pending_->tau >= t_stop) break;
      const Event ev = commit();
      ++done;
      on_event(ev.tau, ev.from, ev.to);
    }
    return done;
  }

  std::uint64_t run_until(double t_stop, std::uint64_t max_events) {
    return run_until(t_stop, max_events, [](double, std::int64_t, std::int64_t) {});
  }

  // Next jump as (time, target); does not commit.
  Event peek() {
    if (!pending_) compute_pending();
    return Event{pending_->tau, current_, pending_->to};
  }

  // Commits exactly one jump.
  Event step() {
    if (!pending_) compute_pending();
    return commit();
  }

 private:
  struct Cell {
    double ell = 1.0;
    double local = 1.0;
    // Per direction (0: towards v-1, 1: towards v+1).
    double resid[2] = {-1.0, -1.0};         // surviving hazard; < 0 means not drawn yet
    std::uint64_t clock_index[2] = {1, 1};  // canonical: current clock; reference: next race
    std::uint64_t edge_key[2] = {0, 0};
  };

  double default_ell(std::int64_t v) const {
    auto it = ell_override_.find(v);
    return it == ell_override_.end() ? ell_default_ : it->second;
  }

  Cell make_cell(std::int64_t v) const {
    Cell c;
    c.ell = c.local = default_ell(v);
    c.edge_key[0] = bank_->edge_key(DirectedEdge{v, v - 1});
    c.edge_key[1] = bank_->edge_key(DirectedEdge{v, v + 1});
    return c;
  }

  void grow_front(std::int64_t new_lo) {
    std::vector<Cell> fresh;
    fresh.reserve(cells_.size() + static_cast<std::size_t>(win_lo_ - new_lo) + 16);
    for (std::int64_t v = new_lo; v < win_lo_; ++v) fresh.push_back(make_cell(v));
    fresh.insert(fresh.end(), cells_.begin(), cells_.end());
    cells_ = std::move(fresh);
    win_lo_ = new_lo;
  }

  void ensure_neighbourhood(std::int64_t v) {
    if (vset_.contains(v - 1) && v - 1 < win_lo_) grow_front(v - 1);
    const std::int64_t win_hi = win_lo_ + static_cast<std::int64_t>(cells_.size()) - 1;
    for (std::int64_t u = win_hi + 1; vset_.contains(v + 1) && u <= v + 1; ++u)
      cells_.push_back(make_cell(u));
  }

  Cell& cell(std::int64_t v) { return cells_[static_cast<std::size_t>(v - win_lo_)]; }

  void compute_pending() {
    Cell& c = cell(current_);
    double best = weights::kInf;
    int best_dir = -1;
    for (int dir = 0; dir < 2; ++dir) {
      const std::int64_t j = current_ + (dir == 1 ? 1 : -1);
      if (!vset_.contains(j)) continue;
      double hazard;
      if (law_ == Law::Canonical) {
        if (c.resid[dir] < 0.0)
          c.resid[dir] = clocks::exp_from_bits(clocks::stream_at(c.edge_key[dir], c.clock_index[dir] - 1));
        hazard = c.resid[dir];
      } else {
        hazard = clocks::exp_from_bits(clocks::stream_at(c.edge_key[dir], c.clock_index[dir] - 1));
        c.clock_index[dir] += 1;
        c.resid[dir] = hazard;  // remembered so the pending race can be committed later
      }
      const double wait = hazard / w_(cell(j).local);
      if (wait < best) {
        best = wait;
        best_dir = dir;
      }
    }
    if (best_dir < 0) throw std::logic_error("isolated vertex: no in-set neighbour");
    if (!(best > 0.0) || !std::isfinite(best))
      throw std::runtime_error("sojourn degenerated to zero; weight overflowed its range");
    pending_ = Pending{t_ + best, best, current_ + (best_dir == 1 ? 1 : -1), best_dir};
  }

  Event commit() {
    const Pending p = *pending_;
    pending_.reset();
    Cell& c = cell(current_);
    c.local += p.sojourn;
    if (law_ == Law::Canonical) {
      // Losing direction keeps what is left of its clock.
      const int lose = 1 - p.dir;
      const std::int64_t j = current_ + (lose == 1 ? 1 : -1);
      if (vset_.contains(j) && c.resid[lose] >= 0.0)
        c.resid[lose] = std::max(0.0, c.resid[lose] - p.sojourn * w_(cell(j).local));
      c.clock_index[p.dir] += 1;
      c.resid[p.dir] = -1.0;
    } else {
      c.resid[0] = c.resid[1] = -1.0;
    }
    const Event ev{p.tau, current_, p.to};
    t_ = p.tau;
    current_ = p.to;
    visited_min_ = std::min(visited_min_, current_);
    visited_max_ = std::max(visited_max_, current_);
    ++jumps_;
    ensure_neighbourhood(current_);
    return ev;
  }

  struct Pending {
    double tau;
    double sojourn;
    std::int64_t to;
    int dir;
  };

  WeightFunction w_;
  VertexSet vset_;
  const ClockBank* bank_;
  Law law_;
  double ell_default_;
  std::map<std::int64_t, double> ell_override_;

  std::vector<Cell> cells_;
  std::int64_t win_lo_ = 0;
  std::int64_t current_ = 0;
  std::int64_t visited_min_ = 0;
  std::int64_t visited_max_ = 0;
  double t_ = 0.0;
  std::uint64_t jumps_ = 0;
  std::optional<Pending> pending_;
};

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

Trajectory simulate(const WeightFunction& w, const VertexSet& vs, const ClockBank& bank,
                    const SimulateOptions& opts);

struct Restricted {
  Trajectory traj;      // watched-only-inside-B path, on the excised time scale
  double time_in_b = 0.0;  // total time spent in B within the horizon
  bool censored = true;    // finite-horizon lower bound for the true exit time
};

// Time change that excises everything spent outside B.
Restricted restrict(const Trajectory& traj, const VertexSet& b);

}  // namespace vrjp::process
