#pragma once

#include <cstdint>
#include <random>

namespace railsim {

// Deterministic random stream. mt19937_64 gives identical raw output on every
// platform; the bounded draws below avoid std::uniform_int_distribution, whose
// mapping is implementation-defined and would break byte-identical replays.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Derive an independent stream from a master seed and a purpose/node label.
  static RngStream derive(std::uint64_t master, std::uint64_t stream_id) {
    std::uint64_t x = master ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    // splitmix64 finalizer, decorrelates adjacent stream ids
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x = x ^ (x >> 31);
    return RngStream(x);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
    for (;;) {
      std::uint64_t v = engine_();
      if (v <= limit) return v % n;
    }
  }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double real01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace railsim
