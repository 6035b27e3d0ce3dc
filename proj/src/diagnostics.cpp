#include "vrjp/diagnostics.hpp"

#include "vrjp/ensemble.hpp"
#include "vrjp/two_vertex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrjp::diagnostics {
namespace {

void require_two_vertex(const Trajectory& traj) {
  if (traj.start != 0 && traj.start != 1)
    throw std::invalid_argument("diagnostics need a trajectory on the vertices {0,1}");
  for (const auto& ev : traj.events)
    if ((ev.from != 0 && ev.from != 1) || (ev.to != 0 && ev.to != 1))
      throw std::invalid_argument("diagnostics need a trajectory on the vertices {0,1}");
}

// Sojourn-by-sojourn walker emitting exact rows at jump and grid times.
struct Walker {
  const WeightFunction& w;
  DiagnosticSeries& out;

  int pos;
  double l[2];
  double t_prev = 0.0;
  // Accumulators at the last committed time.
  double acc_h = 0.0;       // signed reciprocal integral
  double acc_pi = 0.0;      // integral of the compensator rate Pi
  double acc_lambda = 0.0;  // integral of Lambda (the angle bracket)
  double acc_int_a = 0.0;   // integral of 1{X_-=1} dA
  double acc_g_dm = 0.0;    // integral of G_- dM

  Walker(const WeightFunction& wf, DiagnosticSeries& series, int start, double ell0, double ell1)
      : w(wf), out(series), pos(start) {
    l[0] = ell0;
    l[1] = ell1;
  }

  // Emits a row at time tq inside the current sojourn (t_prev <= tq).
  void emit(double tq, bool grid) {
    const double s = tq - t_prev;
    const double l0q = pos == 0 ? l[0] + s : l[0];
    const double l1q = pos == 1 ? l[1] + s : l[1];
    double dh, dpi, dlam, dia;
    if (pos == 0) {
      dh = w.integral_inv_w(l[0], l0q);
      const double w1 = w(l[1]);
      dpi = w1 * s;
      dlam = w1 * s;
      dia = 0.0;
    } else {
      dh = -w.integral_inv_w(l[1], l1q);
      const double w0 = w(l[0]);
      dpi = -w0 * s;
      dlam = w0 * s;
      dia = (1.0 / w(l[1]) - 1.0 / w(l1q)) / w0;
    }
    const double w0q = w(l0q);
    const double w1q = w(l1q);
    const double inv_w0w1 = 1.0 / (w0q * w1q);
    const bool indicator = pos == 1;

    out.t.push_back(tq);
    out.at_one.push_back(indicator ? 1 : 0);
    out.is_grid.push_back(grid ? 1 : 0);
    out.l0.push_back(l0q);
    out.l1.push_back(l1q);
    out.w0.push_back(w0q);
    out.w1.push_back(w1q);
    const double h = acc_h + dh;
    out.h.push_back(h);
    out.z.push_back(h - (indicator ? inv_w0w1 : 0.0));
    out.m.push_back((indicator ? 1.0 : 0.0) - (acc_pi + dpi));
    out.a.push_back(-inv_w0w1);
    out.angle_m.push_back(acc_lambda + dlam);
    out.alpha.push_back(w.tail_integral_pow(l0q, 3) + w.tail_integral_pow(l1q, 3));
    out.beta.push_back(inv_w0w1);
    out.int_a.push_back(acc_int_a + dia);
    out.int_g_dm.push_back(acc_g_dm + dh);
  }

  // Commits the jump ending the current sojourn and emits its row.
  void commit(const process::Event& ev) {
    const double s = ev.tau - t_prev;
    if (pos == 0) {
      acc_h += w.integral_inv_w(l[0], l[0] + s);
      acc_g_dm += w.integral_inv_w(l[0], l[0] + s);
      const double w1 = w(l[1]);
      acc_pi += w1 * s;
      acc_lambda += w1 * s;
    } else {
      const double dh = -w.integral_inv_w(l[1], l[1] + s);
      acc_h += dh;
      acc_g_dm += dh;
      const double w0 = w(l[0]);
      acc_pi += -w0 * s;
      acc_lambda += w0 * s;
      acc_int_a += (1.0 / w(l[1]) - 1.0 / w(l[1] + s)) / w0;
    }
    l[pos] += s;
    // Jump part of the G dM integral: G(tau-) * (change of the indicator).
    const double d_indicator = ev.to == 1 ? 1.0 : -1.0;
    acc_g_dm += -d_indicator / (w(l[0]) * w(l[1]));
    pos = static_cast<int>(ev.to);
    t_prev = ev.tau;
    emit(ev.tau, false);
  }
};

}  // namespace

std::size_t DiagnosticSeries::row_at(double tq) const {
  const auto it = std::lower_bound(t.begin(), t.end(), tq);
  if (it == t.end() || *it != tq) throw std::out_of_range("no sample row at the requested time");
  return static_cast<std::size_t>(it - t.begin());
}

DiagnosticSeries compute_series(const Trajectory& traj, const WeightFunction& w,
                                std::span<const double> grid) {
  require_two_vertex(traj);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > traj.horizon)
      throw std::out_of_range("grid time outside [0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("grid must be ascending");
  }

  DiagnosticSeries series;
  series.horizon = traj.horizon;
  Walker walk(w, series, static_cast<int>(traj.start), traj.ell(0), traj.ell(1));

  std::size_t g = 0;
  auto emit_grid_before = [&](double limit) {
    while (g < grid.size() && grid[g] < limit) {
      walk.emit(grid[g], true);
      ++g;
    }
  };

  walk.emit(0.0, true);  // initial row
  if (g < grid.size() && grid[g] == 0.0) ++g;
  for (const auto& ev : traj.events) {
    emit_grid_before(ev.tau);
    if (g < grid.size() && grid[g] == ev.tau) ++g;  // the jump row covers it
    walk.commit(ev);
  }
  emit_grid_before(std::nextafter(traj.horizon, weights::kInf));
  return series;
}

double decomposition_residual(const DiagnosticSeries& series) {
  double worst = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i)
    worst = std::max(worst, std::abs(series.z[i] - (series.int_a[i] + series.int_g_dm[i])));
  return worst;
}

double decomposition_residual_relative(const DiagnosticSeries& series) {
  double h_max = 0.0;
  for (double h : series.h) h_max = std::max(h_max, std::abs(h));
  return decomposition_residual(series) / std::max(1.0, h_max);
}

BoundChecks pathwise_bound_checks(const DiagnosticSeries& series, double ratio_k) {
  BoundChecks checks;
  checks.rows = series.size();
  constexpr double kSlack = 1e-12;
  const double int_a_end = series.int_a.empty() ? 0.0 : series.int_a.back();
  for (std::size_t i = 0; i < series.size(); ++i) {
    // The jump of Z is reconstructed from O(1) accumulators, so comparisons
    // against beta need an absolute floor at the accumulator rounding scale
    // (beta itself shrinks exponentially for fast weights).
    const double floor = 1e-10 * std::max(1.0, std::abs(series.h[i]));
    // Jump size of Z against beta just before the jump (the weights are
    // continuous through the jump, so beta(tau-) equals the row value).
    if (i > 0 && !series.is_grid[i]) {
      const double indicator_pre = series.at_one[i] ? 0.0 : 1.0;
      const double z_pre = series.h[i] - indicator_pre * series.beta[i];
      const double jump = std::abs(series.z[i] - z_pre);
      if (jump > series.beta[i] * (1.0 + kSlack) + floor) ++checks.jump_size_violations;
    }
    // Ratio sandwich for G^2 Lambda whenever the weights are within ratio_k;
    // all quantities are computed directly, so relative slack suffices.
    const double w0 = series.w0[i], w1 = series.w1[i];
    const double ratio = std::min(w0, w1) / std::max(w0, w1);
    if (ratio >= 1.0 / ratio_k) {
      const double g2l = series.at_one[i] ? 1.0 / (w1 * w1 * w0) : 1.0 / (w0 * w0 * w1);
      const double alpha_rate = series.at_one[i] ? 1.0 / (w1 * w1 * w1) : 1.0 / (w0 * w0 * w0);
      if (g2l < alpha_rate / ratio_k * (1.0 - kSlack) ||
          g2l > alpha_rate * ratio_k * (1.0 + kSlack))
        ++checks.sandwich_violations;
    }
    // Remaining variation of the A-integral is at most beta (horizon form).
    if (std::abs(int_a_end - series.int_a[i]) > series.beta[i] * (1.0 + kSlack) + floor)
      ++checks.a_tail_violations;
  }
  return checks;
}

void extract_martingale_samples(const Trajectory& traj, const WeightFunction& w,
                                std::span<const double> checkpoints,
                                std::span<const double> drift_steps, MartingaleSamples& out,
                                std::size_t run) {
  std::vector<double> grid;
  for (double t : checkpoints) {
    grid.push_back(t);
    for (double h : drift_steps) grid.push_back(t + h);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (traj.horizon < grid.back())
    throw std::invalid_argument("trajectory horizon does not cover the checkpoints");

  const DiagnosticSeries s = compute_series(traj, w, grid);
  const std::size_t nh = drift_steps.size();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const std::size_t row = s.row_at(checkpoints[c]);
    out.m[c][run] = s.m[row];
    out.q[c][run] = s.m[row] * s.m[row] - s.angle_m[row];
    const double indicator = s.at_one[row] ? 1.0 : 0.0;
    const double pi = s.at_one[row] ? -s.w0[row] : s.w1[row];
    for (std::size_t k = 0; k < nh; ++k) {
      const std::size_t row_h = s.row_at(checkpoints[c] + drift_steps[k]);
      const double indicator_h = s.at_one[row_h] ? 1.0 : 0.0;
      out.drift[c * nh + k][run] = indicator_h - indicator - pi * drift_steps[k];
    }
  }
}

MartingaleReport reduce_martingale(std::span<const double> checkpoints,
                                   std::span<const double> drift_steps,
                                   const MartingaleSamples& samples) {
  MartingaleReport report;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    MartingaleReport::Checkpoint cp;
    cp.t = checkpoints[c];
    cp.m = stats::mean_stats(samples.m[c]);
    cp.m2_minus_angle = stats::mean_stats(samples.q[c]);
    cp.mean_ok = std::abs(cp.m.mean) <= 3.0 * cp.m.se;
    cp.isometry_ok = std::abs(cp.m2_minus_angle.mean) <= 3.0 * cp.m2_minus_angle.se;
    report.checkpoints.push_back(cp);
  }
  const std::size_t nh = drift_steps.size();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (std::size_t k = 0; k < nh; ++k) {
      MartingaleReport::Drift d;
      d.t = checkpoints[c];
      d.h = drift_steps[k];
      d.resid = stats::mean_stats(samples.drift[c * nh + k]);
      d.ratio = std::abs(d.resid.mean) / d.h;
      report.drifts.push_back(d);
      // Ratios must not grow with shrinking h, beyond the noise of both.
      if (k > 0) {
        const auto& prev = report.drifts[report.drifts.size() - 2];
        const double noise = 3.0 * (d.resid.se / d.h + prev.resid.se / prev.h);
        if (d.ratio > prev.ratio + noise) report.drift_ok = false;
      }
    }
  }
  report.all_ok = report.drift_ok;
  for (const auto& cp : report.checkpoints)
    report.all_ok = report.all_ok && cp.mean_ok && cp.isometry_ok;
  return report;
}

MartingaleReport martingale_checks(std::span<const Trajectory> runs, const WeightFunction& w,
                                   std::span<const double> checkpoints,
                                   std::span<const double> drift_steps) {
  if (runs.size() < 1000)
    throw std::invalid_argument("martingale checks need at least 1000 independent runs");
  if (checkpoints.empty()) throw std::invalid_argument("martingale checks need checkpoints");

  MartingaleSamples samples;
  samples.m.assign(checkpoints.size(), std::vector<double>(runs.size()));
  samples.q.assign(checkpoints.size(), std::vector<double>(runs.size()));
  samples.drift.assign(checkpoints.size() * drift_steps.size(),
                       std::vector<double>(runs.size()));
  for (std::size_t r = 0; r < runs.size(); ++r)
    extract_martingale_samples(runs[r], w, checkpoints, drift_steps, samples, r);
  return reduce_martingale(checkpoints, drift_steps, samples);
}

EnvelopeResult envelope_checks(const Trajectory& traj, const WeightFunction& w, double t,
                               double s) {
  if (!(0.0 <= t && t <= s && s <= traj.horizon))
    throw std::out_of_range("envelope checks need 0 <= t <= s <= horizon");
  const double grid[2] = {t, s};
  const DiagnosticSeries series =
      compute_series(traj, w, std::span<const double>(grid, t == s ? 1 : 2));
  const std::size_t rt = series.row_at(t);
  const std::size_t rs = series.row_at(s);

  const double dgm = series.int_g_dm[rs] - series.int_g_dm[rt];
  const double dh = series.h[rs] - series.h[rt];
  const double beta_t = series.beta[rt];

  EnvelopeResult r;
  r.lower_lhs = dgm * dgm;
  r.lower_rhs = 0.5 * dh * dh - 4.0 * beta_t * beta_t;
  r.slack_lower = r.lower_lhs - r.lower_rhs;
  const double scale_lo = std::max({1.0, std::abs(r.lower_lhs), std::abs(r.lower_rhs)});
  r.lower_ok = r.lower_lhs >= r.lower_rhs - 1e-12 * scale_lo;

  const double l_min = std::min(series.l0[rt], series.l1[rt]);
  const double tail = w.tail_integral(l_min);
  r.upper_lhs = std::abs(dgm);
  r.upper_rhs = 2.0 * tail + 2.0 * beta_t;
  r.upper_supported = std::isfinite(r.upper_rhs);
  r.slack_upper = r.upper_rhs - r.upper_lhs;
  const double scale_up = std::max(1.0, std::abs(r.upper_lhs));
  r.upper_ok = !r.upper_supported || r.upper_lhs <= r.upper_rhs + 1e-12 * scale_up;
  return r;
}

RatioSeries ratio_series(const DiagnosticSeries& series) {
  RatioSeries out;
  out.t = series.t;
  out.ratio.reserve(series.size());
  out.running_min.reserve(series.size());
  double run_min = weights::kInf;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double r = std::min(series.w0[i], series.w1[i]) / std::max(series.w0[i], series.w1[i]);
    run_min = std::min(run_min, r);
    out.ratio.push_back(r);
    out.running_min.push_back(run_min);
  }
  return out;
}

ZLimitSamples z_limit_samples(const WeightFunction& w, const ZLimitConfig& cfg) {
  if (cfg.n_replicas == 0 || !(cfg.horizon > 0.0))
    throw std::invalid_argument("z limit sampling needs replicas and a positive horizon");
  const auto regime = weights::classify_regime(w);
  if (regime.regime == weights::Regime::Weak)
    throw std::invalid_argument(
        "z limit sampling needs the strong regime (the limit vanishes otherwise)");

  ZLimitSamples out;
  out.z.resize(cfg.n_replicas);
  out.min_l_half.resize(cfg.n_replicas);
  out.min_l_full.resize(cfg.n_replicas);
  out.budget_hit.assign(cfg.n_replicas, 0);

  const auto errors = ensemble::run_replicas(cfg.n_replicas, cfg.threads, [&](std::uint64_t i) {
    const clocks::ClockBank bank(clocks::replica_seed(cfg.master_seed, i));
    process::TwoVertexProcess p(w, bank);
    bool ok = p.run_to(0.5 * cfg.horizon, cfg.max_jumps);
    const double t_half = ok ? 0.5 * cfg.horizon : p.time();
    out.min_l_half[i] = std::min(p.local_time_at(0, t_half), p.local_time_at(1, t_half));
    if (ok) ok = p.run_to(cfg.horizon, cfg.max_jumps - p.jumps());
    const double t_end = ok ? cfg.horizon : p.time();
    const double l0 = p.local_time_at(0, t_end);
    const double l1 = p.local_time_at(1, t_end);
    out.min_l_full[i] = std::min(l0, l1);
    const double h = w.signed_integral_inv_w(l1, l0);
    const int at = p.at();
    out.z[i] = h - (at == 1 ? 1.0 / (w(l0) * w(l1)) : 0.0);
    out.budget_hit[i] = ok ? 0 : 1;
  });
  for (const auto& e : errors)
    if (e) throw std::runtime_error("z limit replica failed: " + *e);
  for (auto b : out.budget_hit) out.n_budget_hit += b;

  std::vector<double> sorted = out.z;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] == sorted[i - 1]) ++out.duplicate_count;

  for (double eps : cfg.eps) {
    std::uint64_t below = 0;
    for (std::size_t i = 0; i < out.z.size(); ++i)
      if (out.budget_hit[i] || std::abs(out.z[i]) < eps) ++below;
    out.frac_below.push_back(static_cast<double>(below) / static_cast<double>(cfg.n_replicas));
  }

  std::uint64_t plateau = 0;
  for (std::size_t i = 0; i < out.z.size(); ++i)
    if (!out.budget_hit[i] && std::abs(out.min_l_full[i] - out.min_l_half[i]) <= cfg.plateau_tol)
      ++plateau;
  out.plateau_fraction = static_cast<double>(plateau) / static_cast<double>(cfg.n_replicas);

  if (cfg.n_replicas >= 4) {
    const std::size_t half = cfg.n_replicas / 2;
    out.self_consistency = stats::ks_two_sample(
        std::span<const double>(out.z.data(), half),
        std::span<const double>(out.z.data() + half, cfg.n_replicas - half), 0.01);
  }
  out.censored = true;
  return out;
}

}  // namespace vrjp::diagnostics
