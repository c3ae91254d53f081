#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "fedsim/aggregate.hpp"
#include "fedsim/batches.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Server-side state: the round counter and the current global model.
struct GlobalState {
    std::size_t round = 0;
    ParamVector params;
};

// A client's identity and its slice of the training set.
struct ClientData {
    int client_id = 0;
    const Dataset* dataset = nullptr;
    std::vector<std::size_t> indices;
};

struct RoundConfig {
    SgdConfig sgd;
    double client_fraction = 0.6;
    std::size_t threads = 1;  // client training workers; result is schedule-independent
};

struct RoundMetrics {
    double global_train_loss = 0.0;
    double mean_sq_distance = 0.0;
};

struct RoundResult {
    GlobalState state;
    WeightReport report;
    RoundMetrics metrics;
};

// Uniform sample of m = max(floor(C*K), 1) distinct client ids, keyed by
// (seed, round). Returned sorted ascending.
inline std::vector<int> sample_clients(std::size_t num_clients, double fraction,
                                       std::size_t round, std::uint64_t seed) {
    if (num_clients < 1) throw ValidationError("sample_clients: need at least one client");
    std::size_t m = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(num_clients)));
    m = std::max<std::size_t>(m, 1);
    m = std::min(m, num_clients);

    std::vector<int> ids(num_clients);
    for (std::size_t i = 0; i < num_clients; ++i) ids[i] = static_cast<int>(i);
    Rng rng = keyed_rng(seed, 0x73616d70ULL, round);  // "samp" stream
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, num_clients - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// E epochs of mini-batch SGD from the broadcast global parameters, with a
// per-epoch reshuffle. Returns the trained parameters and the mean training
// loss of the final epoch. The global parameters are not modified.
inline ClientUpdate local_train(const ParamVector& global_params, const ModelSpec& spec,
                                const ClientData& client, const SgdConfig& cfg,
                                std::uint64_t seed) {
    validate_sgd(cfg);
    if (client.dataset == nullptr || client.indices.empty()) {
        throw ValidationError("local_train: client " + std::to_string(client.client_id) +
                              " has no data");
    }
    try {
        Model model{spec, global_params};
        Rng rng = keyed_rng(seed, 0x74726169ULL);  // "trai" stream
        double final_epoch_loss = 0.0;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            double loss_sum = 0.0;
            for (const auto& chunk : epoch_batches(client.indices, cfg.batch_size, rng)) {
                auto [batch, labels] = gather(*client.dataset, chunk);
                auto [logits, cache] = forward(model, batch);
                loss_sum += cross_entropy_loss(logits, labels) *
                            static_cast<double>(labels.size());
                GradientSet grads = backward(model, cache, labels);
                model.params = sgd_step(model.params, grads, cfg.learning_rate);
            }
            final_epoch_loss = loss_sum / static_cast<double>(client.indices.size());
        }
        return ClientUpdate{client.client_id, std::move(model.params),
                            client.indices.size(), final_epoch_loss};
    } catch (const ShapeError& e) {
        throw ShapeError("client " + std::to_string(client.client_id) + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("client " + std::to_string(client.client_id) + ": " +
                              e.what());
    }
}

// One communication round: sample clients, train each from the current
// global model, weight per the rule, aggregate, advance the round counter.
// Client RNG streams are keyed by (seed, client_id, round), so sequential
// and threaded execution produce bitwise-identical results. Any client
// failure aborts the whole round.
inline RoundResult run_round(const GlobalState& state, const AggregationRule& rule,
                             const std::vector<ClientData>& clients,
                             const ModelSpec& spec, const RoundConfig& cfg,
                             std::uint64_t seed) {
    if (clients.empty()) throw ValidationError("run_round: no clients");
    const std::size_t round = state.round + 1;
    const std::vector<int> sampled =
        sample_clients(clients.size(), cfg.client_fraction, round, seed);

    std::vector<ClientUpdate> updates(sampled.size());
    std::vector<std::exception_ptr> failures(sampled.size());
    auto train_one = [&](std::size_t slot) {
        const ClientData& client = clients.at(static_cast<std::size_t>(sampled[slot]));
        const std::uint64_t client_seed = derive_seed(
            seed, static_cast<std::uint64_t>(client.client_id), round);
        updates[slot] = local_train(state.params, spec, client, cfg.sgd, client_seed);
    };

    const std::size_t workers = std::max<std::size_t>(cfg.threads, 1);
    if (workers == 1 || sampled.size() == 1) {
        for (std::size_t i = 0; i < sampled.size(); ++i) {
            train_one(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, sampled.size()); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < sampled.size();
                     i = next.fetch_add(1)) {
                    try {
                        train_one(i);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);  // abort the round
        }
    }

    WeightReport report;
    if (rule.algorithm == Algorithm::fedba) {
        report = fedba_weights(updates, state.params, rule.guard_epsilon, rule.g_floor);
    } else {
        report = fedavg_weights(updates);
        // distances are not part of the weighting here but still reported
        for (std::size_t i = 0; i < updates.size(); ++i) {
            report.entries[i].sq_distance =
                model_sq_distance(updates[i].params, state.params);
        }
    }

    RoundResult result;
    result.state = GlobalState{round, aggregate(updates, report)};
    result.report = report;
    std::vector<double> losses(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) losses[i] = updates[i].mean_train_loss;
    result.metrics.global_train_loss = global_loss(losses, report);
    result.metrics.mean_sq_distance = report.mean_sq_distance();
    return result;
}

// Accuracy (argmax, ties to the lowest class index) and mean loss over the
// full test set, evaluated in fixed-size chunks.
inline std::pair<double, double> evaluate(const ParamVector& params, const ModelSpec& spec,
                                          const Dataset& test) {
    if (test.size() == 0) throw ValidationError("evaluate: empty test set");
    const Model model{spec, params};
    constexpr std::size_t kChunk = 256;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    std::vector<std::size_t> indices;
    for (std::size_t start = 0; start < test.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, test.size());
        indices.resize(end - start);
        for (std::size_t i = start; i < end; ++i) indices[i - start] = i;
        auto [batch, labels] = gather(test, indices);
        auto [logits, cache] = forward(model, batch);
        loss_sum += cross_entropy_loss(logits, labels) * static_cast<double>(labels.size());
        const std::size_t classes = logits.dim(1);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double* row = logits.data.data() + i * classes;
            std::size_t best = 0;
            for (std::size_t c = 1; c < classes; ++c) {
                if (row[c] > row[best]) best = c;
            }
            if (static_cast<int>(best) == labels[i]) ++correct;
        }
    }
    return {static_cast<double>(correct) / static_cast<double>(test.size()),
            loss_sum / static_cast<double>(test.size())};
}

}  // namespace fedsim
