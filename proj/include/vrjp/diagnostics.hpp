#pragma once

// Pathwise functionals of a two-vertex trajectory: the opposite-vertex
// weights W(i,t), the reciprocal-integral difference H, its compensated form
// Z, the indicator martingale M with its angle bracket, the increasing
// process A, and the tail quantities alpha/beta. Everything is integrated in
// closed form sojourn by sojourn (the occupied vertex's local time ramps
// linearly, the other is frozen), so the identities they satisfy can be
// asserted at machine precision -- no time-stepping anywhere.

#include "vrjp/clocks.hpp"
#include "vrjp/process.hpp"
#include "vrjp/stats.hpp"
#include "vrjp/weights.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace vrjp::diagnostics {

using process::Trajectory;
using weights::WeightFunction;

struct DiagnosticSeries {
  std::vector<double> t;
  std::vector<std::uint8_t> at_one;   // occupied vertex (cadlag) == 1
  std::vector<std::uint8_t> is_grid;  // row inserted from the grid, not a jump
  std::vector<double> l0, l1;
  std::vector<double> w0, w1;
  std::vector<double> h;        // integral of 1/w from 1 to L(0,.) minus the same at L(1,.)
  std::vector<double> z;        // h minus the indicator correction
  std::vector<double> m;        // compensated indicator martingale
  std::vector<double> a;        // -1 / (W0 W1)
  std::vector<double> angle_m;  // integral of the opposite-vertex weight
  std::vector<double> alpha;    // tail integrals of 1/w^3 at both local times
  std::vector<double> beta;     // 1 / (W0 W1)
  // Stieltjes accumulations entering the decomposition of H:
  std::vector<double> int_a;     // integral of 1{X_-=1} dA
  std::vector<double> int_g_dm;  // integral of G_- dM, G = A
  double horizon = 0.0;

  std::size_t size() const noexcept { return t.size(); }
  // Row with sample time exactly `tq` (grid times are emitted verbatim).
  std::size_t row_at(double tq) const;
};

// Exact series at all jump times (plus t = 0 and optional extra grid times,
// flagged). Grid times must lie in [0, horizon]. The A-integral split relies
// on w being continuous (true for the built-in kinds); custom evaluators are
// assumed continuous on [1, inf).
DiagnosticSeries compute_series(const Trajectory& traj, const WeightFunction& w,
                                std::span<const double> grid = {});

// Largest absolute gap, over all sample rows, between H and its decomposition
// into the indicator correction plus the two Stieltjes integrals. Identically
// zero in exact arithmetic.
double decomposition_residual(const DiagnosticSeries& series);

// residual / max(1, max |H|).
double decomposition_residual_relative(const DiagnosticSeries& series);

// Per-event and per-row bound checks (jump size vs beta, the k = 4 ratio
// sandwich for G^2 Lambda, and the tail bound on the A-integral).
struct BoundChecks {
  std::uint64_t jump_size_violations = 0;
  std::uint64_t sandwich_violations = 0;
  std::uint64_t a_tail_violations = 0;
  std::uint64_t rows = 0;
  bool ok() const noexcept {
    return jump_size_violations == 0 && sandwich_violations == 0 && a_tail_violations == 0;
  }
};
BoundChecks pathwise_bound_checks(const DiagnosticSeries& series, double ratio_k = 4.0);

// Ensemble martingale checks at fixed checkpoints: mean zero, the second
// moment against the angle bracket, and the short-increment drift.
struct MartingaleReport {
  struct Checkpoint {
    double t = 0.0;
    stats::MeanStats m;                // mean of M_t
    stats::MeanStats m2_minus_angle;   // mean of M_t^2 - <M>_t
    bool mean_ok = false;
    bool isometry_ok = false;
  };
  struct Drift {
    double t = 0.0;
    double h = 0.0;
    stats::MeanStats resid;  // mean of 1{X_{t+h}=1} - 1{X_t=1} - Pi(t) h
    double ratio = 0.0;      // |mean| / h
  };
  std::vector<Checkpoint> checkpoints;
  std::vector<Drift> drifts;
  bool drift_ok = true;  // ratios shrink with h, within noise
  bool all_ok = false;
};
MartingaleReport martingale_checks(std::span<const Trajectory> runs, const WeightFunction& w,
                                   std::span<const double> checkpoints,
                                   std::span<const double> drift_steps = {});

// Per-run samples feeding the martingale checks: M_t, M_t^2 - <M>_t, and the
// drift residuals, one slot per (checkpoint [, step]).
struct MartingaleSamples {
  std::vector<std::vector<double>> m;      // [checkpoint][run]
  std::vector<std::vector<double>> q;      // [checkpoint][run]
  std::vector<std::vector<double>> drift;  // [checkpoint * n_steps + step][run]
};
// Extracts one run's samples into slot `run` (vectors must be pre-sized).
void extract_martingale_samples(const Trajectory& traj, const WeightFunction& w,
                                std::span<const double> checkpoints,
                                std::span<const double> drift_steps, MartingaleSamples& out,
                                std::size_t run);
// Reduces samples to the report (3-sigma mean/isometry checks, drift ratios).
MartingaleReport reduce_martingale(std::span<const double> checkpoints,
                                   std::span<const double> drift_steps,
                                   const MartingaleSamples& samples);

// Both sides of the martingale-integral envelope over [t, s].
struct EnvelopeResult {
  double lower_lhs = 0.0, lower_rhs = 0.0;
  double upper_lhs = 0.0, upper_rhs = 0.0;
  double slack_lower = 0.0, slack_upper = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  bool upper_supported = false;  // the tail integral must be finite
};
EnvelopeResult envelope_checks(const Trajectory& traj, const WeightFunction& w, double t, double s);

// Running value and running minimum of min(W0,W1)/max(W0,W1).
struct RatioSeries {
  std::vector<double> t;
  std::vector<double> ratio;
  std::vector<double> running_min;
};
RatioSeries ratio_series(const DiagnosticSeries& series);

// Ensemble of Z at a fixed horizon in the strong regime, with atom
// diagnostics. Weak-regime weights are rejected.
struct ZLimitConfig {
  std::uint64_t n_replicas = 0;
  double horizon = 0.0;
  std::uint64_t master_seed = 0;
  double plateau_tol = 1e-6;
  std::vector<double> eps = {1e-1, 1e-2, 1e-3};
  // Per-replica jump budget (non-explosion hard stop). Replicas that exhaust
  // it are flagged and scored conservatively: not plateaued, and |Z| counted
  // as below every eps.
  std::uint64_t max_jumps = 1'000'000'000;
  int threads = 0;
};
struct ZLimitSamples {
  std::vector<double> z;           // Z at the horizon, one per replica
  std::vector<double> min_l_half;  // min local time at horizon/2
  std::vector<double> min_l_full;  // min local time at the horizon
  std::vector<std::uint8_t> budget_hit;  // jump budget exhausted before the horizon
  std::uint64_t n_budget_hit = 0;
  std::uint64_t duplicate_count = 0;
  std::vector<double> frac_below;        // fraction of |Z| < eps, per eps
  double plateau_fraction = 0.0;         // |min_l_full - min_l_half| <= plateau_tol
  stats::KsResult self_consistency;      // first half vs second half of the ensemble
  bool censored = true;                  // horizon values stand in for limits
};
ZLimitSamples z_limit_samples(const WeightFunction& w, const ZLimitConfig& cfg);

}  // namespace vrjp::diagnostics
