#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/idx.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Deterministic synthetic stand-in for an IDX image dataset: ten smooth
// per-class prototypes plus per-sample noise, written with the standard
// MNIST file names. Lets the full pipeline run at any scale without the
// real files on disk.

namespace detail {

inline void write_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

inline std::vector<std::vector<double>> class_prototypes(std::uint64_t seed,
                                                         std::size_t side) {
    std::vector<std::vector<double>> protos(10);
    Rng rng = keyed_rng(seed, 0x70726f74ULL);  // "prot" stream
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& p : protos) {
        p.resize(side * side);
        for (double& v : p) v = uni(rng);
        // box blur a few times to get smooth class-specific structure
        std::vector<double> tmp(p.size());
        for (int pass = 0; pass < 3; ++pass) {
            for (std::size_t y = 0; y < side; ++y) {
                for (std::size_t x = 0; x < side; ++x) {
                    double acc = 0.0;
                    int cnt = 0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const long yy = static_cast<long>(y) + dy;
                            const long xx = static_cast<long>(x) + dx;
                            if (yy < 0 || xx < 0 || yy >= static_cast<long>(side) ||
                                xx >= static_cast<long>(side)) {
                                continue;
                            }
                            acc += p[static_cast<std::size_t>(yy) * side +
                                     static_cast<std::size_t>(xx)];
                            ++cnt;
                        }
                    }
                    tmp[y * side + x] = acc / cnt;
                }
            }
            p.swap(tmp);
        }
        // stretch to full [0, 1] contrast
        double lo = p[0], hi = p[0];
        for (double v : p) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (double& v : p) v = (v - lo) / (hi - lo);
    }
    return protos;
}

inline void write_split(const std::string& images_path, const std::string& labels_path,
                        std::size_t count, std::size_t side,
                        const std::vector<std::vector<double>>& protos, Rng& rng) {
    std::ofstream images(images_path, std::ios::binary);
    std::ofstream labels(labels_path, std::ios::binary);
    if (!images || !labels) {
        throw FormatError("cannot write synthetic dataset under " + images_path);
    }
    write_be32(images, kIdxImagesMagic);
    write_be32(images, static_cast<std::uint32_t>(count));
    write_be32(images, static_cast<std::uint32_t>(side));
    write_be32(images, static_cast<std::uint32_t>(side));
    write_be32(labels, kIdxLabelsMagic);
    write_be32(labels, static_cast<std::uint32_t>(count));

    std::uniform_int_distribution<int> pick_class(0, 9);
    std::uniform_real_distribution<double> noise(-0.35, 0.35);
    std::vector<char> pixel_row(side * side);
    for (std::size_t i = 0; i < count; ++i) {
        const int cls = pick_class(rng);
        const auto& proto = protos[static_cast<std::size_t>(cls)];
        for (std::size_t j = 0; j < proto.size(); ++j) {
            const double v = std::clamp(proto[j] + noise(rng), 0.0, 1.0);
            pixel_row[j] = static_cast<char>(static_cast<int>(v * 255.0 + 0.5));
        }
        images.write(pixel_row.data(), static_cast<std::streamsize>(pixel_row.size()));
        const char lbl = static_cast<char>(cls);
        labels.write(&lbl, 1);
    }
}

}  // namespace detail

// Writes train/test IDX pairs (plain, 28x28, 10 classes) into dir.
inline void write_synthetic_idx(const std::string& dir, std::size_t n_train,
                                std::size_t n_test, std::uint64_t seed) {
    if (n_train == 0 || n_test == 0) {
        throw ValidationError("write_synthetic_idx: counts must be positive");
    }
    std::filesystem::create_directories(dir);
    constexpr std::size_t side = 28;
    auto protos = detail::class_prototypes(seed, side);
    Rng train_rng = keyed_rng(seed, 0x747261696eULL);
    detail::write_split(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte",
                        n_train, side, protos, train_rng);
    Rng test_rng = keyed_rng(seed, 0x74657374ULL);
    detail::write_split(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte",
                        n_test, side, protos, test_rng);
}

}  // namespace fedsim
