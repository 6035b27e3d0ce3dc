// Benchmark: replica ensembles through the serial reference runner and the
// OpenMP runner, with a digest check that both paths produce identical
// results. Prints events/second and the parallel speedup.

#include "vrjp/clocks.hpp"
#include "vrjp/ensemble.hpp"
#include "vrjp/io.hpp"
#include "vrjp/process.hpp"
#include "vrjp/two_vertex.hpp"
#include "vrjp/weights.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

using namespace vrjp;

namespace {

using Clock = std::chrono::steady_clock;

struct BenchResult {
  double seconds = 0.0;
  std::uint64_t events = 0;
  std::uint64_t digest = 0;
};

// Strong-regime pair kernel: the hot loop of the long-horizon ensembles.
BenchResult pair_kernel(std::uint64_t replicas, double horizon, bool parallel, int threads) {
  std::vector<double> out(2 * replicas);
  std::vector<std::uint64_t> jumps(replicas);
  const auto w = weights::WeightFunction::power(2.0);
  auto body = [&](std::uint64_t i) {
    const clocks::ClockBank bank(clocks::replica_seed(17, i));
    process::TwoVertexProcess p(w, bank);
    p.run_to(horizon, 200'000'000);
    out[2 * i] = p.local_time_at(0, horizon);
    out[2 * i + 1] = p.local_time_at(1, horizon);
    jumps[i] = p.jumps();
  };
  const auto start = Clock::now();
  if (parallel)
    ensemble::run_replicas(replicas, threads, body);
  else
    ensemble::run_replicas_serial(replicas, body);
  BenchResult r;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  for (std::uint64_t j : jumps) r.events += j;
  std::string blob(reinterpret_cast<const char*>(out.data()), out.size() * sizeof(double));
  r.digest = io::fnv1a64_bytes(blob);
  return r;
}

// Lattice kernel: the full-line ensembles behind the detectors.
BenchResult lattice_kernel(std::uint64_t replicas, double horizon, bool parallel, int threads) {
  std::vector<std::int64_t> endpoints(replicas);
  std::vector<std::uint64_t> jumps(replicas);
  const auto w = weights::WeightFunction::linear();
  auto body = [&](std::uint64_t i) {
    const clocks::ClockBank bank(clocks::replica_seed(23, i));
    process::LatticeEngine eng(w, process::VertexSet::full_line(), bank,
                               process::LatticeEngine::Law::Reference);
    eng.run_until(horizon, 100'000'000);
    endpoints[i] = eng.current();
    jumps[i] = eng.jumps();
  };
  const auto start = Clock::now();
  if (parallel)
    ensemble::run_replicas(replicas, threads, body);
  else
    ensemble::run_replicas_serial(replicas, body);
  BenchResult r;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  for (std::uint64_t j : jumps) r.events += j;
  std::string blob(reinterpret_cast<const char*>(endpoints.data()),
                   endpoints.size() * sizeof(std::int64_t));
  r.digest = io::fnv1a64_bytes(blob);
  return r;
}

void report(const char* name, const BenchResult& serial, const BenchResult& parallel,
            int threads) {
  const double serial_rate = static_cast<double>(serial.events) / serial.seconds / 1e6;
  const double parallel_rate = static_cast<double>(parallel.events) / parallel.seconds / 1e6;
  std::printf("%-14s serial %7.1f Mev/s   omp(%d) %7.1f Mev/s   speedup %.2fx   results %s\n",
              name, serial_rate, threads, parallel_rate, serial.seconds / parallel.seconds,
              serial.digest == parallel.digest ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t replicas = 64;
  double horizon = 1500.0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--replicas") == 0 && i + 1 < argc)
      replicas = std::strtoull(argv[++i], nullptr, 10);
    else if (std::strcmp(argv[i], "--horizon") == 0 && i + 1 < argc)
      horizon = std::strtod(argv[++i], nullptr);
  }
  const int threads = ensemble::resolve_threads(0);
  std::printf("bench: %llu replicas, horizon %g, %d workers\n",
              static_cast<unsigned long long>(replicas), horizon, threads);

  const auto pair_serial = pair_kernel(replicas, horizon, false, threads);
  const auto pair_parallel = pair_kernel(replicas, horizon, true, threads);
  report("pair kernel", pair_serial, pair_parallel, threads);

  const auto lat_serial = lattice_kernel(replicas / 2, horizon, false, threads);
  const auto lat_parallel = lattice_kernel(replicas / 2, horizon, true, threads);
  report("lattice kernel", lat_serial, lat_parallel, threads);

  return (pair_serial.digest == pair_parallel.digest &&
          lat_serial.digest == lat_parallel.digest)
             ? 0
             : 1;
}
