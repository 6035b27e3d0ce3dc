#pragma once

// Replica execution: an OpenMP-parallel runner and a plain serial reference
// runner. Replicas are independent (each writes only its own output slot), so
// results are identical for any worker count; the unit tests and the bench
// tool compare the two paths.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vrjp::ensemble {

// Worker count: explicit request, else VRJP_LAB_THREADS, else the OpenMP
// default. Returns 1 when OpenMP is unavailable.
inline int resolve_threads(int requested = 0) {
#ifdef _OPENMP
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VRJP_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// Serial reference path.
template <class F>
std::vector<std::optional<std::string>> run_replicas_serial(std::uint64_t n, F&& body) {
  std::vector<std::optional<std::string>> errors(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    } catch (...) {
      errors[i] = "unknown error";
    }
  }
  return errors;
}

// OpenMP path; falls back to the serial loop without OpenMP or with one
// worker. Failures are captured per replica, never aborting the ensemble.
template <class F>
std::vector<std::optional<std::string>> run_replicas(std::uint64_t n, int threads, F&& body) {
  const int workers = resolve_threads(threads);
#ifdef _OPENMP
  if (workers > 1) {
    std::vector<std::optional<std::string>> errors(n);
    const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::uint64_t>(i));
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = "unknown error";
      }
    }
    return errors;
  }
#endif
  (void)workers;
  return run_replicas_serial(n, body);
}

}  // namespace vrjp::ensemble
