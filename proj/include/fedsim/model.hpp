#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// Layer specs. Spatial layers operate on (H, W, C) sample shapes,
// Dense on flat (D) shapes.
struct DenseSpec {
    std::size_t in = 0;
    std::size_t out = 0;
};

struct Conv2dSpec {
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kernel = 0;
    std::size_t padding = 0;
};

struct MaxPool2dSpec {
    std::size_t window = 0;
};

struct ReluSpec {};

struct FlattenSpec {};

using LayerSpec = std::variant<DenseSpec, Conv2dSpec, MaxPool2dSpec, ReluSpec, FlattenSpec>;

inline std::string layer_name(const LayerSpec& layer) {
    struct Visitor {
        std::string operator()(const DenseSpec& l) const {
            return "Dense(" + std::to_string(l.in) + "," + std::to_string(l.out) + ")";
        }
        std::string operator()(const Conv2dSpec& l) const {
            return "Conv2D(" + std::to_string(l.in_ch) + "->" + std::to_string(l.out_ch) +
                   ",k" + std::to_string(l.kernel) + ",p" + std::to_string(l.padding) + ")";
        }
        std::string operator()(const MaxPool2dSpec& l) const {
            return "MaxPool2D(" + std::to_string(l.window) + ")";
        }
        std::string operator()(const ReluSpec&) const { return "ReLU"; }
        std::string operator()(const FlattenSpec&) const { return "Flatten"; }
    };
    return std::visit(Visitor{}, layer);
}

// Model architecture: sample input shape (no batch dim) plus ordered layers.
struct ModelSpec {
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
};

// Flattened model parameters. Canonical element order is layer-major with
// weights before biases: Dense stores W row-major as (out, in) then b(out);
// Conv2D stores W as (out_ch, kh, kw, in_ch) then b(out_ch).
struct ParamVector {
    std::vector<double> data;

    ParamVector() = default;
    explicit ParamVector(std::size_t n) : data(n, 0.0) {}
    explicit ParamVector(std::vector<double> d) : data(std::move(d)) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

// Gradient of the loss, aligned element-for-element with ParamVector.
struct GradientSet {
    std::vector<double> data;

    GradientSet() = default;
    explicit GradientSet(std::size_t n) : data(n, 0.0) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

inline std::size_t layer_param_count(const LayerSpec& layer) {
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
        return d->out * d->in + d->out;
    }
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
        return c->out_ch * c->kernel * c->kernel * c->in_ch + c->out_ch;
    }
    return 0;
}

inline std::size_t param_count(const ModelSpec& spec) {
    std::size_t n = 0;
    for (const auto& layer : spec.layers) n += layer_param_count(layer);
    return n;
}

// Propagates a sample shape through one layer; throws ShapeError on
// incompatibility, naming the layer.
inline std::vector<std::size_t> output_shape(const LayerSpec& layer,
                                             const std::vector<std::size_t>& in,
                                             std::size_t layer_index) {
    const std::string where =
        "layer " + std::to_string(layer_index) + " " + layer_name(layer);
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
        if (d->in == 0 || d->out == 0) {
            throw ShapeError(where + ": zero-sized dimension");
        }
        if (in.size() != 1 || in[0] != d->in) {
            throw ShapeError(where + ": expects flat input of size " +
                             std::to_string(d->in) + ", got " + shape_str(in));
        }
        return {d->out};
    }
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
        if (c->in_ch == 0 || c->out_ch == 0 || c->kernel == 0) {
            throw ShapeError(where + ": zero-sized dimension");
        }
        if (in.size() != 3 || in[2] != c->in_ch) {
            throw ShapeError(where + ": expects (H, W, " + std::to_string(c->in_ch) +
                             ") input, got " + shape_str(in));
        }
        const std::size_t h = in[0] + 2 * c->padding;
        const std::size_t w = in[1] + 2 * c->padding;
        if (h < c->kernel || w < c->kernel) {
            throw ShapeError(where + ": kernel larger than padded input " + shape_str(in));
        }
        return {h - c->kernel + 1, w - c->kernel + 1, c->out_ch};
    }
    if (const auto* p = std::get_if<MaxPool2dSpec>(&layer)) {
        if (p->window == 0) throw ShapeError(where + ": zero window");
        if (in.size() != 3 || in[0] < p->window || in[1] < p->window) {
            throw ShapeError(where + ": expects (H, W, C) input at least " +
                             std::to_string(p->window) + " wide, got " + shape_str(in));
        }
        return {in[0] / p->window, in[1] / p->window, in[2]};
    }
    if (std::holds_alternative<FlattenSpec>(layer)) {
        if (in.empty()) throw ShapeError(where + ": empty input shape");
        return {Tensor::numel(in)};
    }
    return in;  // ReLU
}

// Per-layer sample shapes: result[i] is the input shape of layer i,
// result.back() is the output shape. Throws on any incompatible pair.
inline std::vector<std::vector<std::size_t>> shape_chain(const ModelSpec& spec) {
    std::vector<std::vector<std::size_t>> shapes;
    shapes.push_back(spec.input_shape);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        shapes.push_back(output_shape(spec.layers[i], shapes.back(), i));
    }
    return shapes;
}

inline void validate_spec(const ModelSpec& spec) { shape_chain(spec); }

struct Model {
    ModelSpec spec;
    ParamVector params;
};

// Seeded init: weights uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)],
// biases zero. Identical (spec, seed) gives bitwise-identical params.
inline Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    ParamVector params(param_count(spec));
    Rng rng = keyed_rng(seed, 0x696e6974ULL);  // "init" stream
    std::size_t offset = 0;
    for (const auto& layer : spec.layers) {
        std::size_t weights = 0;
        std::size_t biases = 0;
        std::size_t fan_in = 0;
        if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            weights = d->out * d->in;
            biases = d->out;
            fan_in = d->in;
        } else if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
            weights = c->out_ch * c->kernel * c->kernel * c->in_ch;
            biases = c->out_ch;
            fan_in = c->in_ch * c->kernel * c->kernel;
        } else {
            continue;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < weights; ++i) params[offset++] = dist(rng);
        offset += biases;  // biases stay zero
    }
    return Model{spec, std::move(params)};
}

// Architecture presets. Class count becomes the final Dense width.

inline ModelSpec mlp_spec(std::vector<std::size_t> input_shape, std::size_t num_classes,
                          std::size_t hidden = 128) {
    const std::size_t flat = Tensor::numel(input_shape);
    ModelSpec spec;
    spec.input_shape = std::move(input_shape);
    spec.layers = {FlattenSpec{}, DenseSpec{flat, hidden}, ReluSpec{},
                   DenseSpec{hidden, num_classes}};
    return spec;
}

// Six-layer CNN: two conv blocks (conv, relu, pool) then two dense layers.
inline ModelSpec cnn6_spec(std::vector<std::size_t> input_shape, std::size_t num_classes) {
    if (input_shape.size() != 3) {
        throw ShapeError("cnn6 expects (H, W, C) input, got " + shape_str(input_shape));
    }
    const std::size_t c = input_shape[2];
    ModelSpec spec;
    spec.input_shape = input_shape;
    spec.layers = {Conv2dSpec{c, 16, 5, 2},  ReluSpec{}, MaxPool2dSpec{2},
                   Conv2dSpec{16, 32, 5, 2}, ReluSpec{}, MaxPool2dSpec{2},
                   FlattenSpec{}};
    // flat size after the conv stack depends on the input plane
    auto shapes = shape_chain(spec);
    const std::size_t flat = shapes.back()[0];
    spec.layers.push_back(DenseSpec{flat, 128});
    spec.layers.push_back(ReluSpec{});
    spec.layers.push_back(DenseSpec{128, num_classes});
    return spec;
}

}  // namespace fedsim
