#pragma once

#include <cstdint>

namespace hypochain::rng {

/// splitmix64 step; used to derive stream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with Box-Muller gaussians. One independent stream per
/// (seed, path index); results do not depend on worker count or scheduling.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t key = seed ^ (0xd1342543de82ef95ULL * (index + 1));
        for (auto& word : state_) word = splitmix64(key);
        have_cached_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in (0, 1].
    double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (second draw cached).
    double gaussian();

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
    bool have_cached_;
    double cached_ = 0.0;
};

inline Stream make_stream(std::uint64_t seed, std::uint64_t index) { return Stream(seed, index); }

/// Deterministic sub-seed for grid/experiment stages.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    return splitmix64(s);
}

}  // namespace hypochain::rng
