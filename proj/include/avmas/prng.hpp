#pragma once

#include <cstdint>

namespace avmas {

/// Deterministic 64-bit generator (SplitMix64). The generator is pinned so
/// that independent implementations produce bit-identical streams for a given
/// seed; polymorphism verdicts depend on the mutation bytes it yields.
struct SplitMix64 {
    std::uint64_t state = 0;

    SplitMix64() = default;
    explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint8_t next_byte() { return static_cast<std::uint8_t>(next() & 0xff); }

    friend bool operator==(const SplitMix64&, const SplitMix64&) = default;
};

}  // namespace avmas
