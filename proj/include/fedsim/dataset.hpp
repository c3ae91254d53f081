#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// Labeled image set. Images are (N, H, W, C) doubles scaled to [0, 1].
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }

    std::vector<std::size_t> sample_shape() const {
        return {images.dim(1), images.dim(2), images.dim(3)};
    }
};

inline void validate_dataset(const Dataset& ds, const std::string& name) {
    if (ds.images.shape.size() != 4 || ds.images.dim(0) != ds.labels.size()) {
        throw ValidationError(name + ": " + std::to_string(ds.labels.size()) +
                              " labels for image tensor " + shape_str(ds.images.shape));
    }
    for (int lbl : ds.labels) {
        if (lbl < 0 || static_cast<std::size_t>(lbl) >= ds.num_classes) {
            throw ValidationError(name + ": label " + std::to_string(lbl) +
                                  " out of range [0, " + std::to_string(ds.num_classes) + ")");
        }
    }
}

// Copies the given samples out into a batch tensor plus label array.
inline std::pair<Tensor, std::vector<int>> gather(const Dataset& ds,
                                                  const std::vector<std::size_t>& indices) {
    const std::size_t sample = ds.images.dim(1) * ds.images.dim(2) * ds.images.dim(3);
    Tensor batch({indices.size(), ds.images.dim(1), ds.images.dim(2), ds.images.dim(3)});
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size()) {
            throw ValidationError("gather: index " + std::to_string(src) +
                                  " out of range for dataset of " +
                                  std::to_string(ds.size()));
        }
        std::copy_n(ds.images.data.begin() + src * sample, sample,
                    batch.data.begin() + i * sample);
        labels[i] = ds.labels[src];
    }
    return {std::move(batch), std::move(labels)};
}

// First n samples as a shallow restriction; used for CI-scale runs.
inline Dataset head(const Dataset& ds, std::size_t n) {
    if (n >= ds.size()) return ds;
    const std::size_t sample = ds.images.dim(1) * ds.images.dim(2) * ds.images.dim(3);
    Dataset out;
    out.images = Tensor({n, ds.images.dim(1), ds.images.dim(2), ds.images.dim(3)});
    std::copy_n(ds.images.data.begin(), n * sample, out.images.data.begin());
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    out.num_classes = ds.num_classes;
    return out;
}

}  // namespace fedsim
