#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace warplib {

namespace detail {
// splitmix64 finalizer (Stafford mix 13)
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based generator: output i of stream s under seed k is
/// mix(mix(mix(k) ^ s) + i * golden). Streams are independent, draws are a
/// pure function of (seed, stream, counter), so results do not depend on
/// call interleaving across streams.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(detail::mix64(detail::mix64(seed) ^ stream)), counter_(0) {}

    std::uint64_t next_u64() {
        return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cosine branch only, stateless).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace warplib
