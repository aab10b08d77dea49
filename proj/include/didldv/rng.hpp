#pragma once

#include <cstdint>
#include <random>

namespace didldv {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Counter-based stream seed: depends only on (seed, index), never on execution order.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

using Engine = std::mt19937_64;

[[nodiscard]] inline Engine make_engine(std::uint64_t seed, std::uint64_t index) {
    return Engine(derive_seed(seed, index));
}

}  // namespace didldv
