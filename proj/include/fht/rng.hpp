#pragma once

#include <cstdint>

namespace fht {

/// Counter-based Philox4x32-10 stream. Streams derived from the same seed but
/// different stream ids are statistically independent, and draws depend only
/// on (seed, stream, position) -- never on which thread consumes them.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t block_[4] = {0, 0, 0, 0};
    int block_pos_ = 4;  // consumed
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace fht
