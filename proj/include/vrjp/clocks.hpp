#pragma once

// Seeded clock streams: one i.i.d. unit-exponential sequence per directed
// lattice edge, plus tagged substreams for auxiliary randomness (replica
// seeds, independent initial-weight perturbations, ...).
//
// Every draw is a pure function of (master seed, stream identity, index), so
// re-querying an index returns the identical bits and several simulations can
// share one bank without any synchronisation or caching.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vrjp::clocks {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer (Steele/Lea/Flood); bijective, full avalanche.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// n-th output (n >= 0) of the splitmix64 sequence keyed by `key`.
inline constexpr std::uint64_t stream_at(std::uint64_t key, std::uint64_t n) noexcept {
  return mix64(key + (n + 1) * kGolden);
}

inline constexpr std::uint64_t zigzag(std::int64_t v) noexcept {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Uniform on the open interval (0,1): 2^53 equispaced midpoints, so neither
// endpoint is reachable and -log(u) stays strictly positive and finite.
inline double uniform_from_bits(std::uint64_t x) noexcept {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Exp(1) by inverse CDF; monotone in the underlying uniform, which keeps
// common-random-number couplings aligned.
inline double exp_from_bits(std::uint64_t x) noexcept {
  return -std::log(uniform_from_bits(x));
}

// Collision-resistant seed for a named auxiliary stream.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view tag) noexcept {
  return mix64(mix64(master ^ kGolden) ^ fnv1a64(tag));
}

inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
  return substream_seed(master, "replica/" + std::to_string(index));
}

// Ordered pair of adjacent lattice vertices.
struct DirectedEdge {
  std::int64_t from = 0;
  std::int64_t to = 0;

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

inline void validate(const DirectedEdge& e) {
  const std::int64_t d = e.to - e.from;
  if (d != 1 && d != -1) throw std::invalid_argument("DirectedEdge endpoints must be adjacent");
}

// One bank of per-edge exponential streams, derived from a single seed.
class ClockBank {
 public:
  explicit ClockBank(std::uint64_t master_seed) : seed_(master_seed) {}

  std::uint64_t master_seed() const noexcept { return seed_; }

  std::uint64_t edge_key(const DirectedEdge& e) const noexcept {
    std::uint64_t k = mix64(seed_);
    k = mix64(k ^ zigzag(e.from));
    k = mix64(k ^ zigzag(e.to));
    return k;
  }

  // chi^{(from,to)}_n, n >= 1.
  double exponential(const DirectedEdge& e, std::uint64_t n) const {
    if (n == 0) throw std::invalid_argument("clock index n starts at 1");
    return exp_from_bits(stream_at(edge_key(e), n - 1));
  }

 private:
  std::uint64_t seed_;
};

// Indexed Exp(1) stream for auxiliary randomness (not tied to an edge).
class ExpStream {
 public:
  explicit ExpStream(std::uint64_t key) : key_(key) {}

  double operator()(std::uint64_t n) const { return exp_from_bits(stream_at(key_, n)); }

  double next() { return (*this)(n_++); }

 private:
  std::uint64_t key_;
  std::uint64_t n_ = 0;
};

}  // namespace vrjp::clocks
