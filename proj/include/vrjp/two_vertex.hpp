#pragma once

// Specialised engine for the two-vertex chain {0, 1}. Each sojourn has a
// single candidate edge, so the canonical and reference laws coincide and the
// step is a single clock draw. Used heavily by the long-horizon ensembles,
// where trajectories are never materialised.

#include "vrjp/clocks.hpp"
#include "vrjp/weights.hpp"

#include <concepts>
#include <cstdint>
#include <stdexcept>

namespace vrjp::process {

class TwoVertexProcess {
 public:
  TwoVertexProcess(const weights::WeightFunction& w, const clocks::ClockBank& bank,
                   double ell0 = 1.0, double ell1 = 1.0, int start = 0)
      : w_(w), start_(start) {
    if (!(ell0 >= 1.0) || !(ell1 >= 1.0))
      throw std::invalid_argument("initial local times must be >= 1");
    if (start != 0 && start != 1) throw std::invalid_argument("start vertex must be 0 or 1");
    l_[0] = ell0;
    l_[1] = ell1;
    at_ = start;
    key_[0] = bank.edge_key(clocks::DirectedEdge{0, 1});
    key_[1] = bank.edge_key(clocks::DirectedEdge{1, 0});
  }

  double time() const noexcept { return t_; }
  int at() const noexcept { return at_; }
  int start() const noexcept { return start_; }
  std::uint64_t jumps() const noexcept { return jumps_; }

  // Local time at the last committed jump time.
  double local_time(int v) const noexcept { return l_[v]; }

  // Local time at a query time inside the pending sojourn.
  double local_time_at(int v, double t) const noexcept {
    return v == at_ ? l_[v] + (t - t_) : l_[v];
  }

  double min_local_time() const noexcept { return l_[0] < l_[1] ? l_[0] : l_[1]; }

  // Time of the next jump; the draw is consumed once and survives truncation.
  double next_jump_time() {
    if (!has_pending_) {
      const int from = at_;
      const double chi =
          clocks::exp_from_bits(clocks::stream_at(key_[from], next_index_[from]++));
      pending_sojourn_ = chi / w_(l_[1 - from]);
      has_pending_ = true;
    }
    return t_ + pending_sojourn_;
  }

  // Commits exactly one jump and returns its time.
  double step() {
    const double tau = next_jump_time();
    l_[at_] += pending_sojourn_;
    t_ = tau;
    at_ = 1 - at_;
    has_pending_ = false;
    ++jumps_;
    return tau;
  }

  // Runs until the next jump would land at or after `horizon`; the pending
  // sojourn survives, so later calls resume the same path. Returns false when
  // the jump budget ran out first.
  bool run_to(double horizon, std::uint64_t max_jumps = UINT64_MAX) {
    std::uint64_t left = max_jumps;
    while (left > 0 && next_jump_time() < horizon) {
      l_[at_] += pending_sojourn_;
      t_ += pending_sojourn_;
      at_ = 1 - at_;
      has_pending_ = false;
      ++jumps_;
      --left;
    }
    return left > 0 || next_jump_time() >= horizon;
  }

  // Same, invoking on_event(tau, from, to) after each committed jump.
  template <class OnEvent>
    requires std::invocable<OnEvent&, double, std::int64_t, std::int64_t>
  void run_to(double horizon, OnEvent&& on_event) {
    while (next_jump_time() < horizon) {
      const int from = at_;
      const double tau = step();
      on_event(tau, static_cast<std::int64_t>(from), static_cast<std::int64_t>(1 - from));
    }
  }

 private:
  weights::WeightFunction w_;
  double l_[2];
  double t_ = 0.0;
  int at_;
  int start_;
  std::uint64_t key_[2];
  std::uint64_t next_index_[2] = {0, 0};
  double pending_sojourn_ = 0.0;
  bool has_pending_ = false;
  std::uint64_t jumps_ = 0;
};

}  // namespace vrjp::process
