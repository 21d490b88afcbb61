#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hamlearn {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named consumer of the root seed. Streams are keyed by name and
/// index, so adding a consumer never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0);

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(root, purpose, index));
}

}  // namespace hamlearn
