#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

struct DirichletConfig {
    double mu = 0.1;                   // concentration; small = severe label skew
    std::size_t num_clients = 20;
    std::size_t per_client_count = 0;
    std::uint64_t seed = 1;
};

// Disjoint per-client sample assignments into the training set.
struct PartitionPlan {
    std::vector<std::vector<std::size_t>> assignments;
};

// Label-skew partition: each client draws label proportions from
// Dir(mu * 1_C), proportions are scaled to exactly per_client_count via
// largest-remainder rounding, and samples are taken without replacement
// from per-label pools. When a pool runs dry the deficit moves to the
// label with the largest residual pool (ties broken by label index).
inline PartitionPlan dirichlet_partition(const std::vector<int>& labels,
                                         std::size_t num_classes,
                                         const DirichletConfig& cfg) {
    if (cfg.mu <= 0.0) throw ValidationError("dirichlet_partition: mu must be positive");
    if (cfg.num_clients < 1) {
        throw ValidationError("dirichlet_partition: need at least one client");
    }
    if (cfg.per_client_count < 1) {
        throw ValidationError("dirichlet_partition: per_client_count must be positive");
    }
    if (cfg.per_client_count * cfg.num_clients > labels.size()) {
        throw CapacityError("dirichlet_partition: " + std::to_string(cfg.num_clients) +
                            " clients x " + std::to_string(cfg.per_client_count) +
                            " samples exceeds training set of " +
                            std::to_string(labels.size()));
    }

    Rng rng(cfg.seed);

    // per-label index pools, shuffled once; draws pop from the back
    std::vector<std::vector<std::size_t>> pools(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int lbl = labels[i];
        if (lbl < 0 || static_cast<std::size_t>(lbl) >= num_classes) {
            throw ValidationError("dirichlet_partition: label " + std::to_string(lbl) +
                                  " out of range [0, " + std::to_string(num_classes) + ")");
        }
        pools[static_cast<std::size_t>(lbl)].push_back(i);
    }
    for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

    std::gamma_distribution<double> gamma(cfg.mu, 1.0);
    PartitionPlan plan;
    plan.assignments.resize(cfg.num_clients);
    for (std::size_t k = 0; k < cfg.num_clients; ++k) {
        // proportions q ~ Dir(mu) via normalized gamma draws
        std::vector<double> q(num_classes);
        double total = 0.0;
        for (double& v : q) {
            v = gamma(rng);
            total += v;
        }
        if (total <= 0.0) {
            std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(num_classes));
        } else {
            for (double& v : q) v /= total;
        }

        // largest-remainder rounding to exactly per_client_count
        const double want = static_cast<double>(cfg.per_client_count);
        std::vector<std::size_t> counts(num_classes);
        std::vector<std::pair<double, std::size_t>> fractions(num_classes);
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            const double exact = q[c] * want;
            counts[c] = static_cast<std::size_t>(exact);
            assigned += counts[c];
            fractions[c] = {exact - static_cast<double>(counts[c]), c};
        }
        std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; assigned < cfg.per_client_count; ++i, ++assigned) {
            counts[fractions[i % num_classes].second] += 1;
        }

        auto& out = plan.assignments[k];
        out.reserve(cfg.per_client_count);
        for (std::size_t c = 0; c < num_classes; ++c) {
            const std::size_t take = std::min(counts[c], pools[c].size());
            for (std::size_t i = 0; i < take; ++i) {
                out.push_back(pools[c].back());
                pools[c].pop_back();
            }
        }
        while (out.size() < cfg.per_client_count) {
            // label with the largest residual pool, lowest index on ties
            std::size_t best = 0;
            for (std::size_t c = 1; c < num_classes; ++c) {
                if (pools[c].size() > pools[best].size()) best = c;
            }
            out.push_back(pools[best].back());
            pools[best].pop_back();
        }
        std::sort(out.begin(), out.end());
    }
    return plan;
}

inline PartitionPlan dirichlet_partition(const Dataset& ds, const DirichletConfig& cfg) {
    return dirichlet_partition(ds.labels, ds.num_classes, cfg);
}

// Per-client label histogram; handy for skew diagnostics and tests.
inline std::vector<std::size_t> label_histogram(const std::vector<std::size_t>& assignment,
                                                const std::vector<int>& labels,
                                                std::size_t num_classes) {
    std::vector<std::size_t> hist(num_classes, 0);
    for (std::size_t idx : assignment) hist[static_cast<std::size_t>(labels[idx])] += 1;
    return hist;
}

// Shannon entropy (nats) of a count histogram.
inline double histogram_entropy(const std::vector<std::size_t>& hist) {
    const double total = static_cast<double>(
        std::accumulate(hist.begin(), hist.end(), std::size_t{0}));
    if (total == 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t c : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace fedsim
