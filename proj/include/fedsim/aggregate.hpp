#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

// One client's contribution to a round.
struct ClientUpdate {
    int client_id = 0;
    ParamVector params;
    std::size_t n_k = 0;          // local sample count
    double mean_train_loss = 0.0; // final local epoch
};

struct WeightEntry {
    int client_id = 0;
    double sq_distance = 0.0;  // ||delta_k - delta||^2
    double raw_score = 0.0;    // transformed distance (or n_k for sample weighting)
    double weight = 0.0;
};

struct WeightReport {
    std::vector<WeightEntry> entries;

    double min_weight() const {
        double m = entries.front().weight;
        for (const auto& e : entries) m = std::min(m, e.weight);
        return m;
    }
    double max_weight() const {
        double m = entries.front().weight;
        for (const auto& e : entries) m = std::max(m, e.weight);
        return m;
    }
    // Shannon entropy (nats) of the weight vector.
    double entropy() const {
        double h = 0.0;
        for (const auto& e : entries) {
            if (e.weight > 0.0) h -= e.weight * std::log(e.weight);
        }
        return h;
    }
    double mean_sq_distance() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.sq_distance;
        return s / static_cast<double>(entries.size());
    }
};

enum class Algorithm { fedavg, fedba };

struct AggregationRule {
    Algorithm algorithm = Algorithm::fedba;
    double guard_epsilon = 1e-8;  // shift added to recentred scores
    double g_floor = 1e-12;       // floor applied to g before the log
};

// Piecewise distance squash: identity on [0, 1], arctan beyond.
inline double g(double x) {
    if (x < 0.0) throw DomainError("g: negative input " + std::to_string(x));
    return x <= 1.0 ? x : std::atan(x);
}

// log of the squashed distance, floored to keep the log finite at 0.
inline double distance_transform(double x, double g_floor) {
    return std::log(std::max(g(x), g_floor));
}

inline double model_sq_distance(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) {
        throw ShapeError("model_sq_distance: lengths " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

// Distance-based weights: raw scores are log(g(d_k)), recentred to
// min + epsilon so the normalizer is strictly positive. Equal distances
// reduce to exactly uniform weights.
inline WeightReport fedba_weights(const std::vector<ClientUpdate>& updates,
                                  const ParamVector& global_params,
                                  double guard_epsilon = 1e-8, double g_floor = 1e-12) {
    if (updates.empty()) throw ValidationError("fedba_weights: no client updates");
    if (guard_epsilon <= 0.0 || g_floor <= 0.0) {
        throw ValidationError("fedba_weights: guard parameters must be positive");
    }
    WeightReport report;
    report.entries.resize(updates.size());
    double min_score = std::numeric_limits<double>::infinity();
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const double d = model_sq_distance(updates[i].params, global_params);
        if (!std::isfinite(d)) {
            throw NumericError("fedba_weights: client " +
                               std::to_string(updates[i].client_id) +
                               " has non-finite parameters");
        }
        const double score = distance_transform(d, g_floor);
        report.entries[i] = {updates[i].client_id, d, score, 0.0};
        min_score = std::min(min_score, score);
        max_score = std::max(max_score, score);
    }
    if (min_score == max_score) {
        const double uniform = 1.0 / static_cast<double>(updates.size());
        for (auto& e : report.entries) e.weight = uniform;
        return report;
    }
    double total = 0.0;
    for (const auto& e : report.entries) total += e.raw_score - min_score + guard_epsilon;
    for (auto& e : report.entries) {
        e.weight = (e.raw_score - min_score + guard_epsilon) / total;
    }
    return report;
}

// Sample-count weights: p_k = n_k / sum(n).
inline WeightReport fedavg_weights(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw ValidationError("fedavg_weights: no client updates");
    std::uint64_t total = 0;
    for (const auto& u : updates) {
        if (u.n_k == 0) {
            throw ValidationError("fedavg_weights: client " + std::to_string(u.client_id) +
                                  " reports zero samples");
        }
        total += u.n_k;
    }
    WeightReport report;
    report.entries.resize(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        report.entries[i] = {updates[i].client_id, 0.0,
                             static_cast<double>(updates[i].n_k),
                             static_cast<double>(updates[i].n_k) /
                                 static_cast<double>(total)};
    }
    return report;
}

// Convex combination of client parameters. Summation runs in ascending
// client_id order regardless of the order updates arrived in.
inline ParamVector aggregate(const std::vector<ClientUpdate>& updates,
                             const WeightReport& weights) {
    if (updates.empty() || updates.size() != weights.entries.size()) {
        throw ValidationError("aggregate: " + std::to_string(updates.size()) +
                              " updates vs " + std::to_string(weights.entries.size()) +
                              " weights");
    }
    double weight_sum = 0.0;
    for (const auto& e : weights.entries) weight_sum += e.weight;
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw ValidationError("aggregate: weights sum to " + std::to_string(weight_sum));
    }

    std::vector<std::size_t> order(updates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });

    const std::size_t len = updates.front().params.size();
    ParamVector out(len);
    for (std::size_t oi : order) {
        const ClientUpdate& u = updates[oi];
        const WeightEntry& e = weights.entries[oi];
        if (e.client_id != u.client_id) {
            throw ValidationError("aggregate: weight entry for client " +
                                  std::to_string(e.client_id) +
                                  " does not align with update from client " +
                                  std::to_string(u.client_id));
        }
        if (u.params.size() != len) {
            throw ValidationError("aggregate: client " + std::to_string(u.client_id) +
                                  " params length " + std::to_string(u.params.size()) +
                                  " vs " + std::to_string(len));
        }
        const double w = e.weight;
        for (std::size_t i = 0; i < len; ++i) out[i] += w * u.params[i];
    }
    return out;
}

// Weighted global training loss over the round's participants.
inline double global_loss(const std::vector<double>& client_losses,
                          const WeightReport& weights) {
    if (client_losses.size() != weights.entries.size()) {
        throw ValidationError("global_loss: " + std::to_string(client_losses.size()) +
                              " losses vs " + std::to_string(weights.entries.size()) +
                              " weights");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < client_losses.size(); ++i) {
        total += weights.entries[i].weight * client_losses[i];
    }
    return total;
}

}  // namespace fedsim
