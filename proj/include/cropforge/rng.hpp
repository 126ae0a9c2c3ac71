#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace cropforge {

// Counter-based random streams.
//
// Every random quantity in the toolkit is drawn from a Stream whose key is
// derived from the dataset seed plus a fixed path of tags (row index, plant
// slot, category, image index...). Value i of a stream is
//
//     splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15)
//
// so a stream can be reproduced by any port that implements the mix below.
// Keys are derived by folding parts: k <- mix(k ^ mix(part + GOLDEN)).
// Strings are turned into parts with 64-bit FNV-1a.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t k = mix64(seed + kGolden);
    for (std::uint64_t p : parts) k = mix64(k ^ mix64(p + kGolden));
    return k;
}

class Stream {
public:
    explicit constexpr Stream(std::uint64_t key) : key_(key) {}
    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> parts)
        : key_(derive_key(seed, parts)) {}

    constexpr std::uint64_t next_u64() {
        ++counter_;
        return mix64(key_ + counter_ * kGolden);
    }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Poisson variate. Large means are split into chunks of at most 30 and
    // each chunk sampled with Knuth's product method, so the draw sequence is
    // fully specified by this file.
    std::uint64_t poisson(double mean);

    constexpr std::uint64_t key() const { return key_; }
    constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace cropforge
