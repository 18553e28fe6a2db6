#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace aoisim {

/// SplitMix64 step function. Used for seeding and for deriving independent
/// sub-stream seeds from a base seed; stable across platforms and compilers.
constexpr std::uint64_t splitmix64_round(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combination of two 64-bit values into a new seed.
/// mix_seed(a, b) != mix_seed(b, a) in general.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    return splitmix64_round(splitmix64_round(a + golden) ^ (b + 2 * golden));
}

/// FNV-1a over raw bytes. Stable hash for schedules, policy names, and
/// reproducible per-cell seed derivation.
constexpr std::uint64_t hash_bytes(const unsigned char* data, std::size_t len) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t hash_string(std::string_view s) noexcept {
    return hash_bytes(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

inline std::uint64_t hash_doubles(std::span<const double> v) noexcept {
    return hash_bytes(reinterpret_cast<const unsigned char*>(v.data()),
                      v.size() * sizeof(double));
}

inline std::uint64_t hash_double(double x) noexcept {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    return splitmix64_round(bits + 0x9E3779B97F4A7C15ULL);
}

/// Purpose tags for deriving independent sub-streams from one run seed.
/// Each consumer owns a dedicated stream so that, e.g., switching the
/// arrival delay model never perturbs the generation-gap draws.
namespace stream_tag {
inline constexpr std::uint64_t gaps = 0x01;
inline constexpr std::uint64_t delays = 0x02;
inline constexpr std::uint64_t service = 0x03;
inline constexpr std::uint64_t policy = 0x04;
inline constexpr std::uint64_t idle = 0x05;
inline constexpr std::uint64_t epochs = 0x06;
inline constexpr std::uint64_t schedule = 0x07;
} // namespace stream_tag

/// xoshiro256** generator with hand-rolled variate transforms.
///
/// The standard <random> distributions are implementation-defined, so all
/// sampling here goes through explicit inverse-CDF transforms; two runs with
/// the same seed produce bit-identical draws on any conforming platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9E3779B97F4A7C15ULL;
            w = splitmix64_round(s);
        }
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in (0, 1]; never returns 0, so log() is always finite.
    double next_uniform_oc() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform draw in [0, 1).
    double next_uniform_co() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Exponential(rate) via inverse CDF.
    double next_exponential(double rate) noexcept {
        return -std::log(next_uniform_oc()) / rate;
    }

    /// Fair coin.
    bool next_coin() noexcept { return (next_u64() >> 63) != 0; }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace aoisim
