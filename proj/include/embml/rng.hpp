/**
 * @file rng.hpp
 * @brief Counter-based random streams keyed by (seed, trial, vector).
 *
 * Each stream is a pure function of its key, so a trial generates the same
 * samples no matter which worker runs it or in what order.
 */
#pragma once

#include <cstdint>
#include <limits>

namespace embml {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Hash a tuple of 64-bit words into one key.
constexpr std::uint64_t combineKeys(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t streamKey(std::uint64_t seed, std::uint64_t trial, std::uint64_t vector) noexcept {
    return combineKeys(combineKeys(mix64(seed), trial), vector);
}

/// Derive an independent master seed for a sub-experiment (calibration, grid point, ...).
constexpr std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) noexcept {
    return combineKeys(combineKeys(master, tag ^ 0xA5A5A5A5A5A5A5A5ull), index);
}

/// UniformRandomBitGenerator whose n-th output is mix64(key + n * golden).
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0xD1B54A32D192ED03ull);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace embml
