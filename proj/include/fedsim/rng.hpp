#pragma once

#include <cstdint>
#include <random>

namespace fedsim {

using Rng = std::mt19937_64;

namespace detail {

// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent stream seed from a master seed and a key tuple.
// run_round keys client streams by (seed, client_id, round) so results do
// not depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
    std::uint64_t s = detail::mix64(seed);
    s = detail::mix64(s ^ detail::mix64(a));
    s = detail::mix64(s ^ detail::mix64(b));
    return s;
}

inline Rng keyed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(derive_seed(seed, a, b));
}

}  // namespace fedsim
