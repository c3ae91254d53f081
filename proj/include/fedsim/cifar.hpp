#pragma once

#include <string>
#include <utility>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/io.hpp"

namespace fedsim {

// CIFAR-100 binary record: coarse label byte, fine label byte, then
// 3*32*32 pixels channel-major (all red, all green, all blue).
inline constexpr std::size_t kCifarRecordBytes = 3074;

namespace detail {

inline Dataset parse_cifar100(const std::string& path) {
    auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
        throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                          " is not a positive multiple of " +
                          std::to_string(kCifarRecordBytes));
    }
    const std::size_t n = bytes.size() / kCifarRecordBytes;
    Dataset ds;
    ds.num_classes = 100;
    ds.images = Tensor({n, 32, 32, 3});
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * kCifarRecordBytes;
        ds.labels[i] = rec[1];  // fine label; rec[0] is the coarse label
        const std::uint8_t* pix = rec + 2;
        double* out = ds.images.data.data() + i * 32 * 32 * 3;
        for (std::size_t h = 0; h < 32; ++h) {
            for (std::size_t w = 0; w < 32; ++w) {
                for (std::size_t c = 0; c < 3; ++c) {
                    out[(h * 32 + w) * 3 + c] = pix[c * 1024 + h * 32 + w] / 255.0;
                }
            }
        }
    }
    return ds;
}

}  // namespace detail

// Loads the CIFAR-100 train/test binaries (plain or gzipped), keeping the
// fine labels.
inline std::pair<Dataset, Dataset> load_cifar100(const std::string& train_path,
                                                 const std::string& test_path) {
    return {detail::parse_cifar100(train_path), detail::parse_cifar100(test_path)};
}

}  // namespace fedsim
