#pragma once

// Shared generator of small randomized architectures for gradient checks.
// Cycles through families covering every layer type, with randomized sizes.

#include <cstdint>
#include <random>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim::testing {

struct GradCheckCase {
    ModelSpec spec;
    Tensor batch;
    std::vector<int> labels;
};

inline GradCheckCase make_gradcheck_case(std::size_t index, std::uint64_t seed) {
    Rng rng = keyed_rng(seed, 0x67726164ULL, index);  // "grad" stream
    std::uniform_int_distribution<std::size_t> small(2, 4);
    const std::size_t classes = small(rng);
    const std::size_t batch_size = small(rng);

    ModelSpec spec;
    switch (index % 6) {
        case 0: {  // flatten + dense MLP
            const std::size_t side = small(rng);
            spec.input_shape = {side, side, 1};
            const std::size_t hidden = small(rng) + 2;
            spec.layers = {FlattenSpec{}, DenseSpec{side * side, hidden}, ReluSpec{},
                           DenseSpec{hidden, classes}};
            break;
        }
        case 1: {  // dense stack on flat input
            const std::size_t in = small(rng) + 1;
            const std::size_t hidden = small(rng) + 1;
            spec.input_shape = {in};
            spec.layers = {DenseSpec{in, hidden}, ReluSpec{}, DenseSpec{hidden, classes}};
            break;
        }
        case 2: {  // conv with padding
            const std::size_t side = small(rng) + 2;
            const std::size_t ch = small(rng) - 1;
            spec.input_shape = {side, side, ch};
            spec.layers = {Conv2dSpec{ch, 2, 3, 1}, ReluSpec{}, FlattenSpec{}};
            spec.layers.push_back(DenseSpec{side * side * 2, classes});
            break;
        }
        case 3: {  // conv then pool
            const std::size_t side = 6;
            spec.input_shape = {side, side, 1};
            spec.layers = {Conv2dSpec{1, 3, 2, 0}, MaxPool2dSpec{2}, ReluSpec{},
                           FlattenSpec{}, DenseSpec{2 * 2 * 3, classes}};
            break;
        }
        case 4: {  // two conv blocks, cnn6 in miniature
            spec.input_shape = {8, 8, 1};
            spec.layers = {Conv2dSpec{1, 2, 3, 1}, ReluSpec{}, MaxPool2dSpec{2},
                           Conv2dSpec{2, 3, 3, 1}, ReluSpec{}, MaxPool2dSpec{2},
                           FlattenSpec{}, DenseSpec{2 * 2 * 3, classes}};
            break;
        }
        default: {  // pool straight into dense
            spec.input_shape = {4, 4, 2};
            spec.layers = {MaxPool2dSpec{2}, FlattenSpec{}, DenseSpec{2 * 2 * 2, classes}};
            break;
        }
    }

    GradCheckCase out;
    out.spec = spec;
    std::vector<std::size_t> batch_shape = spec.input_shape;
    batch_shape.insert(batch_shape.begin(), batch_size);
    out.batch = Tensor(batch_shape);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& v : out.batch.data) v = uni(rng);
    std::uniform_int_distribution<int> lbl(0, static_cast<int>(classes) - 1);
    out.labels.resize(batch_size);
    for (int& v : out.labels) v = lbl(rng);
    return out;
}

// Largest per-parameter relative error between the analytic gradient and
// central differences. The denominator floor keeps near-zero gradients from
// blowing up the ratio.
inline double gradcheck_max_rel_error(const GradCheckCase& c, std::uint64_t seed,
                                      double h) {
    Model model = init_model(c.spec, seed);
    auto [logits, cache] = forward(model, c.batch);
    GradientSet exact = backward(model, cache, c.labels);
    GradientSet fd = finite_diff_gradient(model, c.batch, c.labels, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double denom = std::max({std::abs(exact[i]), std::abs(fd[i]), 1e-6});
        worst = std::max(worst, std::abs(exact[i] - fd[i]) / denom);
    }
    return worst;
}

}  // namespace fedsim::testing
