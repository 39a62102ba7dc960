#pragma once

// Seeded random streams. Every consumer (init, training batches, validation,
// test evaluation) draws from its own stream derived from the run seed by a
// fixed purpose tag, so the streams never overlap and runs are reproducible.

#include <cstdint>
#include <random>

namespace deepctrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class StreamKind : std::uint64_t {
  Init = 1,        // parameter initialization
  Train = 2,       // training noise batches
  Validation = 3,  // fixed validation noise set
  Test = 4,        // held-out test evaluation
  Misc = 5,
};

class RngStream {
 public:
  RngStream(std::uint64_t run_seed, StreamKind kind, std::uint64_t salt = 0)
      : engine_(splitmix64(splitmix64(run_seed + 0x51ed2700ULL * static_cast<std::uint64_t>(kind)) ^
                           splitmix64(salt + 0xabcd1234ULL))) {}

  explicit RngStream(std::uint64_t raw_seed) : engine_(raw_seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (explicit formula keeps the stream
  // byte-reproducible; std::normal_distribution caches state).
  double normal() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace deepctrl
