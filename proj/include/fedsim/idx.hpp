#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/io.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

struct IdxImages {
    std::size_t count = 0, height = 0, width = 0;
    std::vector<std::uint8_t> pixels;
};

inline IdxImages parse_idx_images(const std::string& path) {
    auto bytes = read_file(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kIdxImagesMagic) {
        throw FormatError(path + ": bad image magic at offset 0 (expected 0x00000803)");
    }
    IdxImages out;
    out.count = read_be32(bytes, 4, path);
    out.height = read_be32(bytes, 8, path);
    out.width = read_be32(bytes, 12, path);
    const std::size_t expected = 16 + out.count * out.height * out.width;
    if (bytes.size() != expected) {
        throw FormatError(path + ": expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(bytes.size()) +
                          " (data starts at offset 16)");
    }
    out.pixels.assign(bytes.begin() + 16, bytes.end());
    return out;
}

inline std::vector<std::uint8_t> parse_idx_labels(const std::string& path) {
    auto bytes = read_file(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kIdxLabelsMagic) {
        throw FormatError(path + ": bad label magic at offset 0 (expected 0x00000801)");
    }
    const std::size_t count = read_be32(bytes, 4, path);
    if (bytes.size() != 8 + count) {
        throw FormatError(path + ": expected " + std::to_string(8 + count) +
                          " bytes, got " + std::to_string(bytes.size()) +
                          " (data starts at offset 8)");
    }
    return {bytes.begin() + 8, bytes.end()};
}

}  // namespace detail

// Loads an IDX image/label pair (MNIST and Fashion-MNIST layout, 10
// classes). Pixels are scaled by 1/255 into a (N, H, W, 1) tensor. Files
// may be plain or gzip-compressed.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    auto images = detail::parse_idx_images(images_path);
    auto labels = detail::parse_idx_labels(labels_path);
    if (images.count != labels.size()) {
        throw FormatError(images_path + ": " + std::to_string(images.count) +
                          " images but " + std::to_string(labels.size()) + " labels in " +
                          labels_path);
    }
    Dataset ds;
    ds.num_classes = 10;
    ds.images = Tensor({images.count, images.height, images.width, 1});
    for (std::size_t i = 0; i < images.pixels.size(); ++i) {
        ds.images.data[i] = images.pixels[i] / 255.0;
    }
    ds.labels.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 10) {
            throw FormatError(labels_path + ": label " + std::to_string(labels[i]) +
                              " at index " + std::to_string(i) + " exceeds 9");
        }
        ds.labels[i] = labels[i];
    }
    return ds;
}

}  // namespace fedsim
