#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// Local SGD hyperparameters.
struct SgdConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 5;
    std::size_t batch_size = 64;
};

inline void validate_sgd(const SgdConfig& cfg) {
    if (cfg.learning_rate <= 0.0) {
        throw ValidationError("sgd: learning rate must be positive");
    }
    if (cfg.epochs < 1) throw ValidationError("sgd: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ValidationError("sgd: batch size must be >= 1");
}

// Per-layer activations captured by forward, consumed by backward.
// inputs[i] is the batch fed into layer i; pool_argmax[i] holds the flat
// source index of each pooled maximum.
struct ActivationCache {
    std::vector<Tensor> inputs;
    std::vector<std::vector<std::size_t>> pool_argmax;
    Tensor logits;
    std::size_t batch = 0;
    std::size_t layer_count = 0;
    std::size_t param_count = 0;
};

namespace detail {

inline void dgemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k,
                  const double* a, int lda, const double* b, int ldb, double* c,
                  int ldc) {
    // client training threads each issue their own GEMMs; keep BLAS itself
    // single-threaded so results are schedule-independent
    static const bool single = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)single;
    cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, 1.0, a, lda, b, ldb, 0.0, c, ldc);
}

// y(N,out) = x(N,in) . W(out,in)^T + b
inline void dense_forward(const double* x, std::size_t n, const DenseSpec& d,
                          const double* w, const double* b, double* y) {
    dgemm(CblasNoTrans, CblasTrans, static_cast<int>(n), static_cast<int>(d.out),
          static_cast<int>(d.in), x, static_cast<int>(d.in), w, static_cast<int>(d.in),
          y, static_cast<int>(d.out));
    for (std::size_t i = 0; i < n; ++i) {
        double* row = y + i * d.out;
        for (std::size_t o = 0; o < d.out; ++o) row[o] += b[o];
    }
}

inline void dense_backward(const double* x, const double* dy, std::size_t n,
                           const DenseSpec& d, const double* w, double* dx, double* dw,
                           double* db) {
    // dX = dY . W
    dgemm(CblasNoTrans, CblasNoTrans, static_cast<int>(n), static_cast<int>(d.in),
          static_cast<int>(d.out), dy, static_cast<int>(d.out), w,
          static_cast<int>(d.in), dx, static_cast<int>(d.in));
    // dW = dY^T . X
    dgemm(CblasTrans, CblasNoTrans, static_cast<int>(d.out), static_cast<int>(d.in),
          static_cast<int>(n), dy, static_cast<int>(d.out), x, static_cast<int>(d.in),
          dw, static_cast<int>(d.in));
    for (std::size_t o = 0; o < d.out; ++o) db[o] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dy + i * d.out;
        for (std::size_t o = 0; o < d.out; ++o) db[o] += row[o];
    }
}

// NHWC convolution, weights (out_ch, kh, kw, in_ch), stride 1, zero padding.
inline void conv2d_forward(const Tensor& x, const Conv2dSpec& c, const double* w,
                           const double* b, Tensor& y) {
    const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), ci = c.in_ch;
    const std::size_t oh = y.dim(1), ow = y.dim(2), co = c.out_ch, k = c.kernel;
    const long pad = static_cast<long>(c.padding);
    for (std::size_t im = 0; im < n; ++im) {
        for (std::size_t yy = 0; yy < oh; ++yy) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                double* out = &y.data[((im * oh + yy) * ow + xx) * co];
                for (std::size_t o = 0; o < co; ++o) out[o] = b[o];
                for (std::size_t kh = 0; kh < k; ++kh) {
                    const long ih = static_cast<long>(yy + kh) - pad;
                    if (ih < 0 || ih >= static_cast<long>(h)) continue;
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const long iw = static_cast<long>(xx + kw) - pad;
                        if (iw < 0 || iw >= static_cast<long>(wd)) continue;
                        const double* xp =
                            &x.data[((im * h + static_cast<std::size_t>(ih)) * wd +
                                     static_cast<std::size_t>(iw)) * ci];
                        for (std::size_t o = 0; o < co; ++o) {
                            const double* wp = &w[((o * k + kh) * k + kw) * ci];
                            double acc = 0.0;
                            for (std::size_t ic = 0; ic < ci; ++ic) acc += xp[ic] * wp[ic];
                            out[o] += acc;
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_backward(const Tensor& x, const Tensor& dy, const Conv2dSpec& c,
                            const double* w, Tensor& dx, double* dw, double* db) {
    const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), ci = c.in_ch;
    const std::size_t oh = dy.dim(1), ow = dy.dim(2), co = c.out_ch, k = c.kernel;
    const long pad = static_cast<long>(c.padding);
    std::fill(dx.data.begin(), dx.data.end(), 0.0);
    const std::size_t wcount = co * k * k * ci;
    for (std::size_t i = 0; i < wcount; ++i) dw[i] = 0.0;
    for (std::size_t o = 0; o < co; ++o) db[o] = 0.0;
    for (std::size_t im = 0; im < n; ++im) {
        for (std::size_t yy = 0; yy < oh; ++yy) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                const double* g = &dy.data[((im * oh + yy) * ow + xx) * co];
                for (std::size_t o = 0; o < co; ++o) db[o] += g[o];
                for (std::size_t kh = 0; kh < k; ++kh) {
                    const long ih = static_cast<long>(yy + kh) - pad;
                    if (ih < 0 || ih >= static_cast<long>(h)) continue;
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const long iw = static_cast<long>(xx + kw) - pad;
                        if (iw < 0 || iw >= static_cast<long>(wd)) continue;
                        const std::size_t base =
                            ((im * h + static_cast<std::size_t>(ih)) * wd +
                             static_cast<std::size_t>(iw)) * ci;
                        const double* xp = &x.data[base];
                        double* dxp = &dx.data[base];
                        for (std::size_t o = 0; o < co; ++o) {
                            const std::size_t woff = ((o * k + kh) * k + kw) * ci;
                            const double go = g[o];
                            const double* wp = &w[woff];
                            double* dwp = &dw[woff];
                            for (std::size_t ic = 0; ic < ci; ++ic) {
                                dxp[ic] += go * wp[ic];
                                dwp[ic] += go * xp[ic];
                            }
                        }
                    }
                }
            }
        }
    }
}

inline void maxpool_forward(const Tensor& x, const MaxPool2dSpec& p, Tensor& y,
                            std::vector<std::size_t>& argmax) {
    const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const std::size_t oh = y.dim(1), ow = y.dim(2), win = p.window;
    argmax.assign(y.size(), 0);
    for (std::size_t im = 0; im < n; ++im) {
        for (std::size_t yy = 0; yy < oh; ++yy) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (std::size_t kh = 0; kh < win; ++kh) {
                        for (std::size_t kw = 0; kw < win; ++kw) {
                            const std::size_t idx =
                                ((im * h + yy * win + kh) * w + xx * win + kw) * c + ch;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t oidx = ((im * oh + yy) * ow + xx) * c + ch;
                    y.data[oidx] = best;
                    argmax[oidx] = best_idx;
                }
            }
        }
    }
}

}  // namespace detail

// Runs the batch through every layer; the returned cache is what backward
// consumes. Throws ShapeError when the batch does not match the spec input.
inline std::pair<Tensor, ActivationCache> forward(const Model& model, const Tensor& batch) {
    const ModelSpec& spec = model.spec;
    if (model.params.size() != param_count(spec)) {
        throw ShapeError("model: params length " + std::to_string(model.params.size()) +
                         " does not match spec (" + std::to_string(param_count(spec)) + ")");
    }
    if (batch.shape.size() != spec.input_shape.size() + 1) {
        throw ShapeError("forward: batch rank " + std::to_string(batch.shape.size()) +
                         " does not match input shape " + shape_str(spec.input_shape));
    }
    for (std::size_t i = 0; i < spec.input_shape.size(); ++i) {
        if (batch.shape[i + 1] != spec.input_shape[i]) {
            throw ShapeError("forward: batch shape " + shape_str(batch.shape) +
                             " does not match input shape " + shape_str(spec.input_shape));
        }
    }
    const std::size_t n = batch.dim(0);
    if (n == 0) throw ShapeError("forward: empty batch");

    ActivationCache cache;
    cache.batch = n;
    cache.layer_count = spec.layers.size();
    cache.param_count = model.params.size();
    cache.inputs.reserve(spec.layers.size());
    cache.pool_argmax.resize(spec.layers.size());

    auto shapes = shape_chain(spec);
    Tensor cur = batch;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        std::vector<std::size_t> out_shape = shapes[i + 1];
        out_shape.insert(out_shape.begin(), n);
        Tensor out(out_shape);
        const LayerSpec& layer = spec.layers[i];
        const double* p = model.params.data.data() + offset;
        if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            detail::dense_forward(cur.data.data(), n, *d, p, p + d->out * d->in,
                                  out.data.data());
        } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
            detail::conv2d_forward(cur, *cv, p,
                                   p + cv->out_ch * cv->kernel * cv->kernel * cv->in_ch,
                                   out);
        } else if (const auto* mp = std::get_if<MaxPool2dSpec>(&layer)) {
            detail::maxpool_forward(cur, *mp, out, cache.pool_argmax[i]);
        } else if (std::holds_alternative<ReluSpec>(layer)) {
            for (std::size_t j = 0; j < cur.size(); ++j) {
                out.data[j] = cur.data[j] > 0.0 ? cur.data[j] : 0.0;
            }
        } else {  // Flatten
            out.data = cur.data;
        }
        offset += layer_param_count(layer);
        cache.inputs.push_back(std::move(cur));
        cur = std::move(out);
    }
    cache.logits = cur;
    return {std::move(cur), std::move(cache)};
}

// Mean cross-entropy via log-sum-exp; never evaluates log(0).
inline double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape.size() != 2) {
        throw ShapeError("cross_entropy_loss: logits must be (N, classes), got " +
                         shape_str(logits.shape));
    }
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (labels.size() != n) {
        throw ValidationError("cross_entropy_loss: " + std::to_string(labels.size()) +
                              " labels for batch of " + std::to_string(n));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
            throw ValidationError("cross_entropy_loss: label " + std::to_string(labels[i]) +
                                  " out of range [0, " + std::to_string(c) + ")");
        }
        const double* row = logits.data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        total += mx + std::log(sum) - row[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(n);
}

// Analytic gradient of the mean cross-entropy loss w.r.t. every parameter.
inline GradientSet backward(const Model& model, const ActivationCache& cache,
                            const std::vector<int>& labels) {
    const ModelSpec& spec = model.spec;
    if (cache.layer_count != spec.layers.size() ||
        cache.param_count != model.params.size() ||
        cache.inputs.size() != spec.layers.size()) {
        throw ValidationError("backward: cache does not match this model");
    }
    const std::size_t n = cache.batch;
    if (labels.size() != n) {
        throw ValidationError("backward: " + std::to_string(labels.size()) +
                              " labels for cached batch of " + std::to_string(n));
    }
    const std::size_t c = cache.logits.dim(1);

    // d(loss)/d(logits) = (softmax - onehot) / N
    Tensor delta = cache.logits;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
            throw ValidationError("backward: label " + std::to_string(labels[i]) +
                                  " out of range [0, " + std::to_string(c) + ")");
        }
        double* row = delta.data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - lse);
        }
        row[static_cast<std::size_t>(labels[i])] -= 1.0;
        for (std::size_t j = 0; j < c; ++j) row[j] /= static_cast<double>(n);
    }

    GradientSet grads(model.params.size());
    std::vector<std::size_t> offsets(spec.layers.size());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        offsets[i] = offset;
        offset += layer_param_count(spec.layers[i]);
    }

    for (std::size_t ri = spec.layers.size(); ri-- > 0;) {
        const LayerSpec& layer = spec.layers[ri];
        const Tensor& input = cache.inputs[ri];
        const double* p = model.params.data.data() + offsets[ri];
        double* g = grads.data.data() + offsets[ri];
        Tensor dx(input.shape);
        if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            detail::dense_backward(input.data.data(), delta.data.data(), n, *d, p,
                                   dx.data.data(), g, g + d->out * d->in);
        } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
            detail::conv2d_backward(input, delta, *cv, p, dx, g,
                                    g + cv->out_ch * cv->kernel * cv->kernel * cv->in_ch);
        } else if (std::holds_alternative<MaxPool2dSpec>(layer)) {
            const auto& argmax = cache.pool_argmax[ri];
            for (std::size_t j = 0; j < delta.size(); ++j) {
                dx.data[argmax[j]] += delta.data[j];
            }
        } else if (std::holds_alternative<ReluSpec>(layer)) {
            for (std::size_t j = 0; j < delta.size(); ++j) {
                dx.data[j] = input.data[j] > 0.0 ? delta.data[j] : 0.0;
            }
        } else {  // Flatten
            dx.data = delta.data;
        }
        delta = std::move(dx);
    }
    return grads;
}

// params - eta * grads, as a fresh vector.
inline ParamVector sgd_step(const ParamVector& params, const GradientSet& grads,
                            double eta) {
    if (params.size() != grads.size()) {
        throw ShapeError("sgd_step: params length " + std::to_string(params.size()) +
                         " vs grads length " + std::to_string(grads.size()));
    }
    if (eta <= 0.0) throw ValidationError("sgd_step: learning rate must be positive");
    ParamVector out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[i] = params[i] - eta * grads[i];
    }
    return out;
}

// Central-difference gradient; the independent check for backward.
inline GradientSet finite_diff_gradient(const Model& model, const Tensor& batch,
                                        const std::vector<int>& labels, double h) {
    if (h <= 0.0) throw ValidationError("finite_diff_gradient: h must be positive");
    Model probe = model;
    GradientSet grads(model.params.size());
    for (std::size_t i = 0; i < probe.params.size(); ++i) {
        const double orig = probe.params[i];
        probe.params[i] = orig + h;
        const double up = cross_entropy_loss(forward(probe, batch).first, labels);
        probe.params[i] = orig - h;
        const double down = cross_entropy_loss(forward(probe, batch).first, labels);
        probe.params[i] = orig;
        grads[i] = (up - down) / (2.0 * h);
    }
    return grads;
}

}  // namespace fedsim
