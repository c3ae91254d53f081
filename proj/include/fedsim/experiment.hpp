#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/cifar.hpp"
#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/idx.hpp"
#include "fedsim/model.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/round.hpp"

namespace fedsim {

// One metrics row, emitted whenever the round is evaluated.
struct RoundRecord {
    std::size_t round = 0;
    std::string algorithm;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    double global_train_loss = 0.0;
    double min_weight = 0.0;
    double max_weight = 0.0;
    double weight_entropy = 0.0;
    double mean_sq_distance = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "round,algorithm,seed,test_accuracy,test_loss,global_train_loss,"
    "min_weight,max_weight,weight_entropy,mean_sq_distance";

namespace detail {

inline std::string resolve_data_file(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    const std::string plain = dir + "/" + name;
    if (fs::exists(plain)) return plain;
    if (fs::exists(plain + ".gz")) return plain + ".gz";
    throw FormatError("missing dataset file " + plain + " (or .gz)");
}

inline std::string fmt9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

// Train/test pair for the configured dataset under data_dir. MNIST and
// Fashion-MNIST use the standard IDX file names, CIFAR-100 uses
// train.bin/test.bin; a .gz of any file is picked up automatically.
inline std::pair<Dataset, Dataset> load_experiment_data(const ExperimentConfig& cfg) {
    if (cfg.dataset == "cifar100") {
        return load_cifar100(detail::resolve_data_file(cfg.data_dir, "train.bin"),
                             detail::resolve_data_file(cfg.data_dir, "test.bin"));
    }
    Dataset train =
        load_idx(detail::resolve_data_file(cfg.data_dir, "train-images-idx3-ubyte"),
                 detail::resolve_data_file(cfg.data_dir, "train-labels-idx1-ubyte"));
    Dataset test =
        load_idx(detail::resolve_data_file(cfg.data_dir, "t10k-images-idx3-ubyte"),
                 detail::resolve_data_file(cfg.data_dir, "t10k-labels-idx1-ubyte"));
    return {std::move(train), std::move(test)};
}

// Full experiment: load, partition once, run T rounds, evaluate every
// eval_every rounds (and always the last). Bitwise-reproducible for a
// fixed config.
inline std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    auto [train, test] = load_experiment_data(cfg);
    if (cfg.train_subset > 0) train = head(train, cfg.train_subset);

    std::size_t per_client = cfg.per_client_count;
    if (per_client == 0) {
        per_client = train.size() / cfg.num_clients;
        if (per_client == 0) {
            throw ConfigError("per_client_count: training set of " +
                              std::to_string(train.size()) + " cannot cover " +
                              std::to_string(cfg.num_clients) + " clients");
        }
    }

    DirichletConfig part_cfg{cfg.dirichlet_mu, cfg.num_clients, per_client, cfg.seed};
    PartitionPlan plan = dirichlet_partition(train, part_cfg);

    const ModelSpec spec = cfg.model == "mlp"
                               ? mlp_spec(train.sample_shape(), train.num_classes)
                               : cnn6_spec(train.sample_shape(), train.num_classes);
    Model model = init_model(spec, cfg.seed);

    std::vector<ClientData> clients(cfg.num_clients);
    for (std::size_t k = 0; k < cfg.num_clients; ++k) {
        clients[k] = ClientData{static_cast<int>(k), &train,
                                std::move(plan.assignments[k])};
    }

    AggregationRule rule;
    rule.algorithm = cfg.algorithm == "fedavg" ? Algorithm::fedavg : Algorithm::fedba;
    RoundConfig round_cfg{
        SgdConfig{cfg.learning_rate, cfg.local_epochs, cfg.batch_size},
        cfg.client_fraction, cfg.threads};

    GlobalState state{0, std::move(model.params)};
    std::vector<RoundRecord> records;
    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        RoundResult result = run_round(state, rule, clients, spec, round_cfg, cfg.seed);
        state = std::move(result.state);
        if (t % cfg.eval_every == 0 || t == cfg.rounds) {
            auto [accuracy, test_loss] = evaluate(state.params, spec, test);
            RoundRecord rec;
            rec.round = t;
            rec.algorithm = cfg.algorithm;
            rec.seed = cfg.seed;
            rec.test_accuracy = accuracy;
            rec.test_loss = test_loss;
            rec.global_train_loss = result.metrics.global_train_loss;
            rec.min_weight = result.report.min_weight();
            rec.max_weight = result.report.max_weight();
            rec.weight_entropy = result.report.entropy();
            rec.mean_sq_distance = result.metrics.mean_sq_distance;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

inline std::string metrics_to_csv(const std::vector<RoundRecord>& records) {
    std::string out = kMetricsHeader;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.round) + ',' + r.algorithm + ',' + std::to_string(r.seed);
        for (double v : {r.test_accuracy, r.test_loss, r.global_train_loss, r.min_weight,
                         r.max_weight, r.weight_entropy, r.mean_sq_distance}) {
            out += ',';
            out += detail::fmt9(v);
        }
        out += '\n';
    }
    return out;
}

// CSV with the fixed header; floats printed with 9 significant digits.
inline void write_metrics(const std::vector<RoundRecord>& records,
                          const std::string& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ValidationError(out_path + ": cannot open for writing");
    out << metrics_to_csv(records);
    if (!out) throw ValidationError(out_path + ": write failed");
}

inline std::vector<RoundRecord> parse_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw FormatError(path + ": unexpected header '" + line + "'");
    }
    std::vector<RoundRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 10 fields");
        }
        RoundRecord r;
        try {
            r.round = std::stoull(fields[0]);
            r.algorithm = fields[1];
            r.seed = std::stoull(fields[2]);
            r.test_accuracy = std::stod(fields[3]);
            r.test_loss = std::stod(fields[4]);
            r.global_train_loss = std::stod(fields[5]);
            r.min_weight = std::stod(fields[6]);
            r.max_weight = std::stod(fields[7]);
            r.weight_entropy = std::stod(fields[8]);
            r.mean_sq_distance = std::stod(fields[9]);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        records.push_back(std::move(r));
    }
    return records;
}

// Final/best accuracy plus rounds-to-threshold lines.
inline std::string summarize(const std::vector<RoundRecord>& records) {
    if (records.empty()) throw ValidationError("summarize: no records");
    const RoundRecord& last = records.back();
    double best = records.front().test_accuracy;
    std::size_t best_round = records.front().round;
    for (const auto& r : records) {
        if (r.test_accuracy > best) {
            best = r.test_accuracy;
            best_round = r.round;
        }
    }
    std::string out;
    out += "algorithm: " + last.algorithm + " (seed " + std::to_string(last.seed) + ")\n";
    out += "rounds recorded: " + std::to_string(records.size()) + " (last round " +
           std::to_string(last.round) + ")\n";
    out += "final accuracy: " + detail::fmt9(last.test_accuracy) + "\n";
    out += "best accuracy: " + detail::fmt9(best) + " (round " +
           std::to_string(best_round) + ")\n";
    for (double threshold : {0.5, 0.8}) {
        std::string line = "rounds to " + detail::fmt9(threshold * 100) + "% accuracy: ";
        bool reached = false;
        for (const auto& r : records) {
            if (r.test_accuracy >= threshold) {
                line += std::to_string(r.round);
                reached = true;
                break;
            }
        }
        if (!reached) line += "not reached";
        out += line + "\n";
    }
    return out;
}

}  // namespace fedsim
