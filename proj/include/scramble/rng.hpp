#pragma once

#include <cstdint>

namespace scramble {

// splitmix64; used to expand seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with hand-rolled bounded draws so results do not depend on a
// standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, bound); Lemire rejection, unbiased. bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

// Independent stream for (purpose, index) pairs, so one component's draw
// count can never perturb another component's sequence.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t st = master_seed;
    std::uint64_t a = splitmix64(st);
    st = a ^ (purpose * 0x9e3779b97f4a7c15ULL);
    std::uint64_t b = splitmix64(st);
    st = b ^ (index * 0xd1342543de82ef95ULL);
    return splitmix64(st);
}

inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t purpose, std::uint64_t index = 0) {
    return Rng(derive_seed(master_seed, purpose, index));
}

namespace stream {
inline constexpr std::uint64_t placement = 1;
inline constexpr std::uint64_t planar_points = 2;
inline constexpr std::uint64_t bootstrap = 3;
inline constexpr std::uint64_t miners = 4;
inline constexpr std::uint64_t node = 5;      // per-node heuristic draws, indexed by node id
inline constexpr std::uint64_t jitter = 6;    // per-node message jitter, indexed by node id
inline constexpr std::uint64_t sweep_point = 7;
}  // namespace stream

}  // namespace scramble
