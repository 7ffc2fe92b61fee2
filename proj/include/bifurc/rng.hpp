#pragma once

#include <cstdint>
#include <initializer_list>

namespace bifurc {

// Counter-based splittable generator. Every consumer derives its own stream
// from (base seed, stream ids...), so results never depend on thread count or
// evaluation order.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    // one SplitMix64 output step keyed by both inputs
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// stream ids keep the derivations of unrelated operations disjoint
namespace stream {
inline constexpr std::uint64_t kTrialWord = 1;    // lyapunov trials
inline constexpr std::uint64_t kScanWord = 2;     // common-random-number word lists
inline constexpr std::uint64_t kStability = 3;    // stability_scan words
inline constexpr std::uint64_t kChain = 4;        // stationary-measure chains
inline constexpr std::uint64_t kDivisor = 5;      // trace-divisor words
inline constexpr std::uint64_t kGraph = 6;        // graph-volume words
inline constexpr std::uint64_t kValidation = 7;   // determinant sampling etc.
}  // namespace stream

inline SplitMix64 derive_stream(std::uint64_t base_seed,
                                std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = base_seed;
    for (std::uint64_t id : ids) s = seed_mix(s, id);
    return SplitMix64(s);
}

}  // namespace bifurc
