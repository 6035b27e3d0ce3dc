#include "vrjp/experiments.hpp"

#include "vrjp/clocks.hpp"

#include <doctest.h>

#include <cmath>

using namespace vrjp;
using experiments::DetectorParams;
using experiments::ExperimentConfig;
using experiments::Kind;
using process::Trajectory;
using process::VertexSet;
using json = nlohmann::json;

namespace {
constexpr std::uint64_t kSeed = 0xe8f1u;

// Stays on {-1, 0, 1} with vanishing side sojourns: the textbook localized
// picture.
Trajectory localized_fixture(double horizon) {
  Trajectory traj;
  traj.vset = VertexSet::full_line();
  traj.start = 0;
  double t = 0.0;
  int side = 1;
  while (t + 1.0 < horizon) {
    traj.events.push_back({t + 0.9, 0, side});
    traj.events.push_back({t + 0.9 + 1e-4, side, 0});
    side = -side;
    t += 1.0;
  }
  traj.horizon = horizon;
  return traj;
}

Trajectory ballistic_fixture(double horizon) {
  Trajectory traj;
  traj.vset = VertexSet::full_line();
  traj.start = 0;
  for (std::int64_t k = 0; k + 1 < static_cast<std::int64_t>(horizon); ++k)
    traj.events.push_back({static_cast<double>(k + 1), k, k + 1});
  traj.horizon = horizon;
  return traj;
}

// Sweeps -3..3 back and forth forever with unit sojourns.
Trajectory sweeping_fixture(double horizon) {
  Trajectory traj;
  traj.vset = VertexSet::full_line();
  traj.start = 0;
  std::int64_t pos = 0;
  int dir = 1;
  double t = 1.0;
  while (t < horizon) {
    const std::int64_t next = pos + dir;
    traj.events.push_back({t, pos, next});
    pos = next;
    if (pos == 3 || pos == -3) dir = -dir;
    t += 1.0;
  }
  traj.horizon = horizon;
  return traj;
}

}  // namespace

TEST_CASE("localization detector on synthetic fixtures") {
  DetectorParams params;
  const auto loc = experiments::detect_localization(localized_fixture(100.0), params);
  CHECK(loc.localized);
  REQUIRE(loc.center.has_value());
  CHECK(*loc.center == 0);
  CHECK(loc.side_plateau);
  CHECK_FALSE(loc.degenerate);

  const auto bal = experiments::detect_localization(ballistic_fixture(100.0), params);
  CHECK_FALSE(bal.localized);

  // Silent window: no jumps at all is a degenerate run, never a pass.
  Trajectory quiet;
  quiet.vset = VertexSet::full_line();
  quiet.start = 0;
  quiet.events = {{1.0, 0, 1}, {2.0, 1, 0}};
  quiet.horizon = 100.0;
  const auto deg = experiments::detect_localization(quiet, params);
  CHECK(deg.degenerate);
  CHECK_FALSE(deg.localized);
}

TEST_CASE("recurrence detector on synthetic fixtures") {
  DetectorParams params;
  const auto rec = experiments::detect_recurrence(sweeping_fixture(400.0), params);
  CHECK(rec.recurrent);
  CHECK(rec.probes.size() == 7);

  const auto bal = experiments::detect_recurrence(ballistic_fixture(400.0), params);
  CHECK_FALSE(bal.recurrent);

  const auto loc = experiments::detect_recurrence(localized_fixture(400.0), params);
  CHECK_FALSE(loc.recurrent);
}

TEST_CASE("transient signature on synthetic fixtures") {
  DetectorParams params;
  CHECK(experiments::transient_signature(ballistic_fixture(200.0), params));
  CHECK_FALSE(experiments::transient_signature(sweeping_fixture(200.0), params));
  CHECK_FALSE(experiments::transient_signature(localized_fixture(200.0), params));
}

TEST_CASE("two-sample KS basics") {
  std::vector<double> same = {0.1, 0.4, 0.9, 1.7, 2.2};
  const auto eq = experiments::ks_two_sample(same, same, 0.01);
  CHECK(eq.d == 0.0);
  CHECK_FALSE(eq.reject);

  std::vector<double> zeros(100, 0.0), ones(100, 1.0);
  const auto disjoint = experiments::ks_two_sample(zeros, ones, 0.01);
  CHECK(disjoint.d == 1.0);
  CHECK(disjoint.reject);

  std::vector<double> empty;
  CHECK_THROWS_AS(experiments::ks_two_sample(empty, same, 0.01), std::invalid_argument);
}

TEST_CASE("KS level calibration under the null") {
  std::size_t rejects = 0;
  const std::size_t reps = 500;
  const std::size_t n = 400;
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<double> xs(n), ys(n);
    const std::uint64_t kx = clocks::replica_seed(kSeed, 2 * r);
    const std::uint64_t ky = clocks::replica_seed(kSeed, 2 * r + 1);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = clocks::exp_from_bits(clocks::stream_at(kx, i));
      ys[i] = clocks::exp_from_bits(clocks::stream_at(ky, i));
    }
    if (experiments::ks_two_sample(xs, ys, 0.01).reject) ++rejects;
  }
  const double rate = static_cast<double>(rejects) / static_cast<double>(reps);
  CHECK(rate >= 0.002);
  CHECK(rate <= 0.03);
}

TEST_CASE("config validation collects every violation") {
  json bad = {{"experiment", "no_such_kind"},
              {"weight", {{"kind", "power"}, {"a", -1.0}}},
              {"alpha", 7.0},
              {"replicas", 0}};
  std::vector<std::string> errors;
  (void)ExperimentConfig::from_json(bad, errors);
  CHECK(errors.size() >= 4);

  json good = {{"experiment", "coupling_domination"},
               {"weight", {{"kind", "linear"}}},
               {"replicas", 10},
               {"seed", 7},
               {"n_jumps", 25}};
  errors.clear();
  const auto cfg = ExperimentConfig::from_json(good, errors);
  CHECK(errors.empty());
  CHECK(cfg.kind == Kind::CouplingDomination);
  CHECK(cfg.replicas == 10);
  CHECK(cfg.n_jumps == 25);
}

TEST_CASE("verdicts are reproducible across runs and worker counts") {
  ExperimentConfig cfg;
  cfg.kind = Kind::CouplingDomination;
  cfg.weight_spec = {{"kind", "power"}, {"a", 2.0}};
  cfg.replicas = 20;
  cfg.n_jumps = 50;
  cfg.seed = 99;

  cfg.threads = 1;
  const auto a = experiments::run_experiment(cfg);
  const auto b = experiments::run_experiment(cfg);
  cfg.threads = 4;
  const auto c = experiments::run_experiment(cfg);
  CHECK(a.digest == b.digest);
  CHECK(a.digest == c.digest);
  CHECK(a.pass);

  // Byte-identical JSON once the timestamp is dropped.
  auto ja = a.to_json();
  auto jc = c.to_json();
  ja.erase("timestamp");
  jc.erase("timestamp");
  CHECK(ja.dump() == jc.dump());
}

TEST_CASE("verdict statistic is recomputable from its replica records") {
  ExperimentConfig cfg;
  cfg.kind = Kind::TwoVertexWeak;
  cfg.weight_spec = {{"kind", "linear"}};
  cfg.replicas = 25;
  cfg.horizon = 200.0;
  cfg.max_jumps = 10'000'000;
  cfg.pass_fraction = 0.99;
  cfg.min_local_threshold = 5.0;
  cfg.seed = 123;
  const auto v = experiments::run_experiment(cfg);
  std::size_t exceeds = 0;
  for (const auto& row : v.replicas)
    if (row.at("min_local_final").get<double>() > cfg.min_local_threshold) ++exceeds;
  const double frac = static_cast<double>(exceeds) / static_cast<double>(cfg.replicas);
  CHECK(v.checks.front().statistic == doctest::Approx(frac).epsilon(1e-15));
  CHECK(v.n_replicas == 25);
  CHECK(v.seed == 123);
}

TEST_CASE("single replica yields one record and a degenerate ensemble") {
  ExperimentConfig cfg;
  cfg.kind = Kind::CouplingDomination;
  cfg.weight_spec = {{"kind", "linear"}};
  cfg.replicas = 1;
  cfg.n_jumps = 10;
  cfg.seed = 5;
  const auto v = experiments::run_experiment(cfg);
  CHECK(v.replicas.size() == 1);
  CHECK(v.pass);
}

TEST_CASE("engine comparison finds no distributional gap") {
  ExperimentConfig cfg;
  cfg.kind = Kind::EngineComparison;
  cfg.weight_spec = {{"kind", "power"}, {"a", 2.0}};
  cfg.graph_spec = "full_line";
  cfg.replicas = 2000;
  cfg.seed = 31;
  cfg.alpha = 0.01;
  const auto v = experiments::run_experiment(cfg);
  CHECK(v.pass);
}

TEST_CASE("small localization and recurrence ensembles behave") {
  // Desk-scale sanity at horizon 500 (pilot values: ~0.76 localized, ~0.75
  // recurrent; the acceptance suite runs the full-scale versions).
  ExperimentConfig loc;
  loc.kind = Kind::Localization;
  loc.weight_spec = {{"kind", "power"}, {"a", 2.0}};
  loc.horizon = 500.0;
  loc.replicas = 40;
  loc.seed = 77;
  loc.pass_fraction = 0.55;
  loc.max_jumps = 20'000'000;
  const auto lv = experiments::run_experiment(loc);
  CHECK(lv.checks.front().statistic >= 0.55);

  ExperimentConfig rec;
  rec.kind = Kind::Recurrence;
  rec.weight_spec = {{"kind", "linear"}};
  rec.horizon = 500.0;
  rec.replicas = 40;
  rec.seed = 78;
  rec.pass_fraction = 0.55;
  rec.max_jumps = 20'000'000;
  const auto rv = experiments::run_experiment(rec);
  CHECK(rv.checks.front().statistic >= 0.55);

  ExperimentConfig non = rec;
  non.kind = Kind::Nontransience;
  non.comparison = "le";
  non.pass_fraction = 0.05;
  non.seed = 79;
  const auto nv = experiments::run_experiment(non);
  CHECK(nv.pass);
}
