#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Full description of one experiment. Defaults are the reference
// hyperparameters (K=20, C=0.6, eta=1e-3, E=5, B=64, mu=0.1, T=500).
struct ExperimentConfig {
    std::string dataset = "mnist";  // mnist | fashion-mnist | cifar100
    std::string data_dir = "data";
    std::string algorithm = "fedba";  // fedba | fedavg
    std::size_t num_clients = 20;     // K
    double client_fraction = 0.6;     // C
    double learning_rate = 1e-3;
    std::size_t local_epochs = 5;
    std::size_t batch_size = 64;
    double dirichlet_mu = 0.1;
    std::size_t rounds = 500;          // T
    std::size_t per_client_count = 0;  // 0 = floor(train size / K)
    std::string model = "cnn6";        // cnn6 | mlp
    std::uint64_t seed = 1;
    std::size_t eval_every = 1;
    std::string out_path = "metrics.csv";
    std::size_t train_subset = 0;  // 0 = full training set
    std::size_t threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    if (pos != value.size() || value[0] == '-') {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
    if (pos != value.size()) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
    return out;
}

}  // namespace detail

// Applies one key=value pair; unknown keys and range violations raise
// ConfigError naming the key.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "dataset") {
        if (value != "mnist" && value != "fashion-mnist" && value != "cifar100") {
            throw ConfigError("dataset: must be mnist, fashion-mnist or cifar100, got '" +
                              value + "'");
        }
        cfg.dataset = value;
    } else if (key == "data_dir") {
        cfg.data_dir = value;
    } else if (key == "algorithm") {
        if (value != "fedavg" && value != "fedba") {
            throw ConfigError("algorithm: must be fedavg or fedba, got '" + value + "'");
        }
        cfg.algorithm = value;
    } else if (key == "num_clients") {
        cfg.num_clients = detail::parse_uint(key, value);
        if (cfg.num_clients < 1) throw ConfigError("num_clients: must be >= 1");
    } else if (key == "client_fraction") {
        cfg.client_fraction = detail::parse_double(key, value);
        if (cfg.client_fraction <= 0.0 || cfg.client_fraction > 1.0) {
            throw ConfigError("client_fraction: must be in (0, 1], got " + value);
        }
    } else if (key == "learning_rate") {
        cfg.learning_rate = detail::parse_double(key, value);
        if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate: must be positive");
    } else if (key == "local_epochs") {
        cfg.local_epochs = detail::parse_uint(key, value);
        if (cfg.local_epochs < 1) throw ConfigError("local_epochs: must be >= 1");
    } else if (key == "batch_size") {
        cfg.batch_size = detail::parse_uint(key, value);
        if (cfg.batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    } else if (key == "dirichlet_mu") {
        cfg.dirichlet_mu = detail::parse_double(key, value);
        if (cfg.dirichlet_mu <= 0.0) throw ConfigError("dirichlet_mu: must be positive");
    } else if (key == "rounds") {
        cfg.rounds = detail::parse_uint(key, value);
    } else if (key == "per_client_count") {
        cfg.per_client_count = detail::parse_uint(key, value);
    } else if (key == "model") {
        if (value != "cnn6" && value != "mlp") {
            throw ConfigError("model: must be cnn6 or mlp, got '" + value + "'");
        }
        cfg.model = value;
    } else if (key == "seed") {
        cfg.seed = detail::parse_uint(key, value);
    } else if (key == "eval_every") {
        cfg.eval_every = detail::parse_uint(key, value);
        if (cfg.eval_every < 1) throw ConfigError("eval_every: must be >= 1");
    } else if (key == "out_path") {
        cfg.out_path = value;
    } else if (key == "train_subset") {
        cfg.train_subset = detail::parse_uint(key, value);
    } else if (key == "threads") {
        cfg.threads = detail::parse_uint(key, value);
        if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

// Flat key=value file; '#' starts a comment, blank lines are skipped.
inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value, got '" + line + "'");
        }
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
}

// Named presets pinning the reference protocol per dataset.
inline void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    ExperimentConfig base;
    cfg.num_clients = base.num_clients;
    cfg.client_fraction = base.client_fraction;
    cfg.learning_rate = base.learning_rate;
    cfg.local_epochs = base.local_epochs;
    cfg.batch_size = base.batch_size;
    cfg.dirichlet_mu = base.dirichlet_mu;
    cfg.rounds = base.rounds;
    cfg.model = "cnn6";
    if (name == "mnist-paper") {
        cfg.dataset = "mnist";
        cfg.per_client_count = 3000;
    } else if (name == "fashion-paper") {
        cfg.dataset = "fashion-mnist";
        cfg.per_client_count = 3000;
    } else if (name == "cifar100-paper") {
        cfg.dataset = "cifar100";
        cfg.per_client_count = 2500;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
}

inline void validate_config(const ExperimentConfig& cfg) {
    // ranges are enforced on entry; cross-field checks live here
    if (cfg.client_fraction <= 0.0 || cfg.client_fraction > 1.0) {
        throw ConfigError("client_fraction: must be in (0, 1]");
    }
    if (cfg.num_clients < 1) throw ConfigError("num_clients: must be >= 1");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate: must be positive");
    if (cfg.dirichlet_mu <= 0.0) throw ConfigError("dirichlet_mu: must be positive");
}

}  // namespace fedsim
