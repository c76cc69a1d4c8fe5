#pragma once

// Portable pseudo-random streams. Every value is defined by integer
// arithmetic on uint64_t, so any language can reproduce the same draws:
//
//   splitmix64(x):  x += 0x9E3779B97F4A7C15
//                   z  = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//                   z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                   return z ^ (z >> 31)
//
//   Rng is xoshiro256** with its four state words filled by successive
//   splitmix64 outputs of the seed.
//
//   below(n):   t = (2^64 - n) mod n; draw r until r >= t; return r mod n
//   uniform01:  (next() >> 11) * 2^-53
//   shuffle:    for i = n-1 .. 1: swap(a[i], a[below(i + 1)])
//
//   derive_seed(seed, parts...) = splitmix64(seed ^ fnv1a64(p0 0x1F p1 0x1F ...))

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace sage {

inline constexpr std::uint64_t kDefaultSeed = 42;

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept { return splitmix64_next(x); }

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

/// Seed for one (document, transform) unit of work, independent of execution order.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view first, Parts... rest) {
    std::uint64_t h = fnv1a64(first);
    ((h = fnv1a64(std::string_view(rest), fnv1a64("\x1f", h))), ...);
    return splitmix64(seed ^ h);
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T, std::size_t Extent>
    void shuffle(std::span<T, Extent> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

}  // namespace sage
