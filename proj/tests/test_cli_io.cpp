#include "vrjp/io.hpp"

#include "vrjp/diagnostics.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace vrjp;
using clocks::ClockBank;
using process::Trajectory;
using process::VertexSet;
using weights::WeightFunction;

namespace {
constexpr std::uint64_t kSeed = 0x10c5u;
}

TEST_CASE("doubles survive the shortest round trip") {
  const double values[] = {0.0,   1.0,     -1.0,      0.1,    1.0 / 3.0, 1e-300,
                           1e300, 123.456, 2.5e-17,   7e22,   -0.875};
  for (double v : values) CHECK(io::parse_double(io::format_double(v)) == v);
  CHECK(io::format_double(weights::kInf) == "inf");
  CHECK(io::parse_double("inf") == weights::kInf);
  CHECK_THROWS_AS(io::parse_double("0.1x"), std::invalid_argument);
}

TEST_CASE("trajectory CSV round trip is bit exact") {
  process::SimulateOptions opts;
  opts.horizon = 40.0;
  const auto traj =
      simulate(WeightFunction::power(2.0), VertexSet::segment(0, 1), ClockBank(kSeed), opts);
  const std::string csv = io::trajectory_csv(traj);
  const auto back = io::trajectory_from_csv(csv, traj.ell_default, traj.horizon);
  REQUIRE(back.events.size() == traj.events.size());
  for (std::size_t i = 0; i < traj.events.size(); ++i) CHECK(back.events[i] == traj.events[i]);
  CHECK(back.start == traj.start);
  CHECK(back.horizon == traj.horizon);

  // Diagnostics computed from the re-ingested path match bit for bit.
  const auto w = WeightFunction::power(2.0);
  const auto s1 = diagnostics::compute_series(traj, w);
  const auto s2 = diagnostics::compute_series(back, w);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1.h[i] == s2.h[i]);
    CHECK(s1.z[i] == s2.z[i]);
    CHECK(s1.m[i] == s2.m[i]);
    CHECK(s1.angle_m[i] == s2.angle_m[i]);
  }
}

TEST_CASE("csv headers and shapes") {
  process::SimulateOptions opts;
  opts.horizon = 5.0;
  const auto w = WeightFunction::linear();
  const auto traj = simulate(w, VertexSet::segment(0, 1), ClockBank(kSeed + 1), opts);

  const std::string tcsv = io::trajectory_csv(traj);
  CHECK(tcsv.rfind("n,tau,from,to\n", 0) == 0);

  const std::string lcsv = io::local_times_csv(traj);
  CHECK(lcsv.rfind("vertex,L\n", 0) == 0);

  const auto series = diagnostics::compute_series(traj, w);
  const std::string scsv = io::series_csv(series);
  CHECK(scsv.rfind("t,W0,W1,H,Z,M,A,angleM,alpha,beta,grid\n", 0) == 0);

  const auto paths = coupling::run_coupled_pair(w, ClockBank(kSeed + 2), 7);
  const std::string ccsv = io::coupled_csv(paths);
  CHECK(ccsv.rfind("k,tilde_L0,tilde_L1,star_L0,star_L1\n", 0) == 0);
  CHECK(std::count(ccsv.begin(), ccsv.end(), '\n') == 8);

  CHECK_THROWS_AS(io::trajectory_from_csv("bogus\n1,2,3,4\n"), std::invalid_argument);
}

TEST_CASE("atomic write leaves no temporary behind") {
  const auto dir = std::filesystem::temp_directory_path() / "vrjp_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "out.txt";
  io::atomic_write(path, "payload\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "payload\n");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("local-time conservation is visible in the exported snapshot") {
  process::SimulateOptions opts;
  opts.horizon = 30.0;
  const auto traj =
      simulate(WeightFunction::linear(), VertexSet::full_line(), ClockBank(kSeed + 3), opts);
  const std::string csv = io::local_times_csv(traj);
  double sum = 0.0;
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::size_t eol = csv.find('\n', pos);
    sum += io::parse_double(csv.substr(comma + 1, eol - comma - 1)) - traj.ell_default;
    pos = eol + 1;
  }
  CHECK(sum == doctest::Approx(traj.horizon).epsilon(1e-9));
}
