#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// One epoch's batch index lists: indices are shuffled with the caller's
// RNG, then cut into batch_size chunks with the final short batch kept.
inline std::vector<std::vector<std::size_t>> epoch_batches(
    const std::vector<std::size_t>& indices, std::size_t batch_size, Rng& rng) {
    if (indices.empty()) throw ValidationError("epoch_batches: empty index set");
    if (batch_size < 1) throw ValidationError("epoch_batches: batch size must be >= 1");
    std::vector<std::size_t> order = indices;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    out.reserve((order.size() + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, order.size());
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

// Materialized single-epoch batches for the given seed.
inline std::vector<std::pair<Tensor, std::vector<int>>> batches(
    const Dataset& ds, const std::vector<std::size_t>& indices, std::size_t batch_size,
    std::uint64_t seed) {
    Rng rng = keyed_rng(seed, 0x62617463ULL);  // "batc" stream
    std::vector<std::pair<Tensor, std::vector<int>>> out;
    for (const auto& chunk : epoch_batches(indices, batch_size, rng)) {
        out.push_back(gather(ds, chunk));
    }
    return out;
}

}  // namespace fedsim
