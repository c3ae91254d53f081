// Acceptance suite. Runs every release criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero if any fail.
//
// Usage: fedsim_acceptance [mnist-subset-dir]
//   mnist-subset-dir: directory with the bundled MNIST IDX files
//                     (default: data/mnist-subset)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fedsim/fedsim.hpp"
#include "support/random_models.hpp"
#include "support/temp_dir.hpp"

using namespace fedsim;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point criterion_start;

void begin() { criterion_start = std::chrono::steady_clock::now(); }

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - criterion_start)
                             .count();
    std::printf("[%s] criterion %d: %s (%lld ms) %s\n", ok ? "PASS" : "FAIL", criterion,
                name.c_str(), static_cast<long long>(elapsed), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// ---- criterion 1: g and A against library oracles ----

void criterion_math_table() {
    begin();
    bool ok = true;
    std::string detail;
    const double points[] = {0.5, 1.0, std::tan(1.0), 2.0};
    for (double x : points) {
        const double g_oracle = x <= 1.0 ? x : std::atan(x);
        const double a_oracle = std::log(std::max(g_oracle, 1e-12));
        if (std::abs(g(x) - g_oracle) > 1e-12 ||
            std::abs(distance_transform(x, 1e-12) - a_oracle) > 1e-12) {
            ok = false;
            detail += " mismatch at x=" + fmt(x);
        }
    }
    report(1, "g and A match library-oracle values to 1e-12", ok, detail);
}

// ---- criterion 2: weight simplex over randomized inputs ----

std::vector<ClientUpdate> updates_at_distances(const std::vector<double>& distances) {
    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        updates.push_back(ClientUpdate{static_cast<int>(i),
                                       ParamVector(std::vector<double>{std::sqrt(distances[i])}), 600, 0.0});
    }
    return updates;
}

void criterion_weight_simplex() {
    begin();
    const ParamVector zero_global{std::vector<double>{0.0}};
    Rng rng(20240601);
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> msize(1, 24);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 10000 && ok; ++trial) {
        const std::size_t m = msize(rng);
        std::vector<double> distances(m, 0.0);
        const int mode = trial % 5;
        for (double& d : distances) {
            switch (mode) {
                case 0: d = pick(rng) < 0.3 ? 0.0 : pick(rng) * 2.0; break;  // zeros mixed in
                case 1: d = 0.9 + 0.2 * pick(rng); break;  // straddles x = 1
                case 2: d = pick(rng) * 1e-7; break;       // deep in the log's range
                case 3: d = pick(rng) * 1e5; break;        // arctan branch
                default: break;                            // all equal, set below
            }
        }
        if (mode == 4) {
            std::fill(distances.begin(), distances.end(), pick(rng) * 2.0);
        }
        WeightReport report = fedba_weights(updates_at_distances(distances), zero_global);
        double sum = 0.0;
        for (const auto& e : report.entries) {
            if (!std::isfinite(e.weight) || e.weight < 0.0 || e.weight > 1.0) {
                ok = false;
                detail = "bad weight " + fmt(e.weight) + " in trial " +
                         std::to_string(trial);
            }
            sum += e.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            ok = false;
            detail = "weight sum " + fmt(sum) + " in trial " + std::to_string(trial);
        }
    }
    report(2, "10,000 randomized FedBA weight vectors stay on the simplex", ok, detail);
}

// ---- criterion 3: FedAvg reduction with forced-equal distances ----

void criterion_fedavg_reduction() {
    begin();
    // sign-flipped copies of one offset vector: every client sits at the
    // same squared distance, bitwise, while the parameters differ
    Rng rng(77);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    const std::size_t dim = 32;
    ParamVector global(dim);
    std::vector<double> offset(dim);
    for (auto& v : global.data) v = uni(rng);
    for (auto& v : offset) v = uni(rng);

    std::vector<ClientUpdate> updates;
    for (int k = 0; k < 4; ++k) {
        ParamVector p(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double sign = ((i + static_cast<std::size_t>(k)) % 2 == 0) ? 1.0 : -1.0;
            p[i] = global[i] + sign * offset[i];
        }
        updates.push_back(ClientUpdate{k, std::move(p), 600, 0.0});
    }

    WeightReport ba = fedba_weights(updates, global);
    WeightReport avg = fedavg_weights(updates);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (ba.entries[i].weight != 0.25 || avg.entries[i].weight != 0.25) {
            ok = false;
            detail = "weights not exactly uniform";
        }
    }
    ParamVector agg_ba = aggregate(updates, ba);
    ParamVector agg_avg = aggregate(updates, avg);
    if (agg_ba.data != agg_avg.data) {
        ok = false;
        detail = "aggregated models differ";
    }
    report(3, "equal distances + equal n_k: FedBA == FedAvg bitwise", ok, detail);
}

// ---- criterion 4: gradient correctness across architectures ----

void criterion_gradients() {
    begin();
    bool ok = true;
    std::string detail;
    double worst = 0.0;
    for (std::size_t i = 0; i < 24; ++i) {
        const auto c = testing::make_gradcheck_case(i, 424242);
        const double err = testing::gradcheck_max_rel_error(c, 424242 + i, 1e-5);
        worst = std::max(worst, err);
        if (err >= 1e-4) {
            ok = false;
            detail += " arch " + std::to_string(i) + " err " + fmt(err);
        }
    }
    report(4, "backward vs central differences < 1e-4 over 24 architectures", ok,
           "worst " + fmt(worst));
}

// ---- criterion 5: partitioner at reference scale ----

void criterion_partitioner() {
    begin();
    testing::TempDir tmp("accept-synth");
    write_synthetic_idx(tmp.path.string(), 60000, 100, 5);

    ExperimentConfig cfg;
    apply_preset(cfg, "mnist-paper");
    cfg.data_dir = tmp.path.string();
    auto [train, test] = load_experiment_data(cfg);

    bool ok = train.size() == 60000;
    std::string detail;
    DirichletConfig part{cfg.dirichlet_mu, cfg.num_clients, cfg.per_client_count,
                         cfg.seed};
    PartitionPlan plan = dirichlet_partition(train, part);
    std::set<std::size_t> seen;
    if (plan.assignments.size() != 20) ok = false;
    for (const auto& a : plan.assignments) {
        if (a.size() != 3000) {
            ok = false;
            detail = "block size " + std::to_string(a.size());
        }
        for (std::size_t idx : a) {
            if (!seen.insert(idx).second) {
                ok = false;
                detail = "overlapping assignment";
            }
        }
    }

    // label-skew entropy must rise with the concentration parameter
    double low = 0.0, high = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (double mu : {0.1, 100.0}) {
            PartitionPlan p = dirichlet_partition(
                train, DirichletConfig{mu, 20, 3000, seed});
            double mean_entropy = 0.0;
            for (const auto& a : p.assignments) {
                mean_entropy += histogram_entropy(label_histogram(a, train.labels, 10));
            }
            mean_entropy /= 20.0;
            (mu == 0.1 ? low : high) += mean_entropy / 5.0;
        }
    }
    if (!(low < high)) {
        ok = false;
        detail += " entropy order violated: " + fmt(low) + " vs " + fmt(high);
    }
    report(5, "mnist-paper preset: 20 disjoint blocks of 3000; entropy rises with mu",
           ok, "mean entropy " + fmt(low) + " (mu=0.1) vs " + fmt(high) + " (mu=100)");
}

// ---- criterion 6: determinism of a full run ----

ExperimentConfig determinism_config(const std::string& data_dir) {
    ExperimentConfig cfg;
    cfg.dataset = "mnist";
    cfg.data_dir = data_dir;
    cfg.model = "mlp";
    cfg.train_subset = 1000;
    cfg.num_clients = 10;
    cfg.client_fraction = 0.6;
    cfg.local_epochs = 2;
    cfg.batch_size = 32;
    cfg.rounds = 5;
    cfg.seed = 42;
    return cfg;
}

void criterion_determinism(const std::string& data_dir) {
    begin();
    ExperimentConfig cfg = determinism_config(data_dir);
    const std::string first = metrics_to_csv(run_experiment(cfg));
    const std::string second = metrics_to_csv(run_experiment(cfg));
    cfg.threads = 2;
    const std::string threaded = metrics_to_csv(run_experiment(cfg));
    bool ok = true;
    std::string detail;
    if (first != second) {
        ok = false;
        detail = "repeat run differs";
    }
    if (first != threaded) {
        ok = false;
        detail += " threaded run differs";
    }
    report(6, "byte-identical CSV across repeat and threaded runs", ok, detail);
}

// ---- criterion 7: desk-scale comparative run ----

void criterion_comparative(const std::string& data_dir) {
    begin();
    auto final_accuracy = [&](const std::string& algorithm, std::uint64_t seed) {
        ExperimentConfig cfg;
        cfg.dataset = "mnist";
        cfg.data_dir = data_dir;
        cfg.model = "mlp";
        cfg.algorithm = algorithm;
        cfg.train_subset = 6000;
        cfg.num_clients = 10;
        cfg.client_fraction = 0.6;
        cfg.dirichlet_mu = 0.1;
        cfg.rounds = 50;
        cfg.seed = seed;
        cfg.eval_every = 50;  // the criterion scores final accuracy only
        cfg.threads = 2;
        auto records = run_experiment(cfg);
        return records.back().test_accuracy;
    };

    std::string detail;
    double mean_avg = 0.0, mean_ba = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        const double a = final_accuracy("fedavg", seed);
        const double b = final_accuracy("fedba", seed);
        mean_avg += a / 3.0;
        mean_ba += b / 3.0;
        detail += "seed " + std::to_string(seed) + ": fedavg " + fmt(a) + ", fedba " +
                  fmt(b) + "; ";
    }
    detail += "means: fedavg " + fmt(mean_avg) + ", fedba " + fmt(mean_ba);
    const bool ok = mean_avg >= 0.80 && mean_ba >= 0.80 && mean_ba >= mean_avg - 0.01;
    report(7,
           "MNIST desk-scale: both mean finals >= 0.80 and FedBA >= FedAvg - 1pp "
           "(3 seeds)",
           ok, detail);
}

// ---- criterion 8: sampling sizes ----

void criterion_sampling() {
    begin();
    bool ok = true;
    std::string detail;
    for (std::size_t t = 1; t <= 20; ++t) {
        const auto g20 = sample_clients(20, 0.6, t, 7);
        if (g20.size() != 12) {
            ok = false;
            detail = "round " + std::to_string(t) + " sampled " +
                     std::to_string(g20.size());
        }
        std::set<int> unique(g20.begin(), g20.end());
        if (unique.size() != g20.size()) {
            ok = false;
            detail += " duplicate ids";
        }
    }
    if (sample_clients(20, 0.04, 1, 7).size() != 1) {
        ok = false;
        detail += " C*K<1 did not clamp to 1";
    }
    report(8, "|G_t| = 12 for K=20, C=0.6 over 20 rounds; floor clamps to 1", ok,
           detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string data_dir = argc > 1 ? argv[1] : "data/mnist-subset";
    try {
        criterion_math_table();
        criterion_weight_simplex();
        criterion_fedavg_reduction();
        criterion_gradients();
        criterion_partitioner();
        criterion_determinism(data_dir);
        criterion_comparative(data_dir);
        criterion_sampling();
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
