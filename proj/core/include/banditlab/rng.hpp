#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace banditlab {

// SplitMix64 finalizer. Used to derive independent seeds from a master seed
// and an index, so seed streams do not depend on execution order.
inline uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// mix_seed(master, i) = splitmix64(splitmix64(master) ^ (i+1)*phi64).
// This is the seed-derivation function used everywhere in the harness.
inline uint64_t mix_seed(uint64_t master, uint64_t index) {
    return splitmix64(splitmix64(master) ^ (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// Deterministic random stream. mt19937_64 has a standard-defined output
// sequence, and all derived draws below are built from raw bits with fixed
// transforms, so streams reproduce bit-exactly across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]
    double next_unit_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

    // standard normal via Box-Muller (cosine branch); one draw per call,
    // no cached spare, so each call is a pure function of the stream state
    double next_normal() {
        const double u1 = next_unit_pos();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // uniform integer in [0, n), unbiased via rejection
    int next_int(int n) {
        const uint64_t bound = n;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<int>(x % bound);
    }

    bool next_bool() { return (gen_() >> 63) != 0; }

private:
    std::mt19937_64 gen_;
};

// Fixed stream tags for per-episode sub-streams.
namespace stream_tag {
inline constexpr uint64_t instance = 1;
inline constexpr uint64_t context = 2;
inline constexpr uint64_t noise = 3;
inline constexpr uint64_t audit = 4;
inline constexpr uint64_t policy_base = 16;
}  // namespace stream_tag

}  // namespace banditlab
