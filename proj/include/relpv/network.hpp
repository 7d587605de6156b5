#pragma once

// Executable form of a ModelSpec: owns per-layer parameters and runs
// forward/backward over mini-batches. Samples are processed in index order
// and every reduction is fixed-order, so results are bitwise reproducible
// for a given seed. Batch normalization is the only batch-coupled layer.
//
// A trailing softmax layer is treated as part of the loss: forward_batch
// returns the logits feeding it, and softmax_crossentropy fuses the rest.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "relpv/conv3d.hpp"
#include "relpv/errors.hpp"
#include "relpv/init.hpp"
#include "relpv/model_spec.hpp"
#include "relpv/relpv_block.hpp"
#include "relpv/stft_basis.hpp"
#include "relpv/tensor.hpp"
#include "relpv/tensor_ops.hpp"

namespace relpv {

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* tensor;
};

template <typename T>
class ModelInstance {
public:
    struct LayerParams {
        RelpvParams<T> relpv;
        Conv3dParams<T> conv;
        Tensor<T> fc_w, fc_b;                           // (units, in), (units)
        Tensor<T> bn_gamma, bn_beta, bn_mean, bn_var;   // (c) each
    };

    explicit ModelInstance(ModelSpec spec)
        : spec_(std::move(spec)), shapes_(infer_shapes(spec_)) {
        allocate();
    }

    const ModelSpec& spec() const { return spec_; }
    const std::vector<Shape>& node_shapes() const { return shapes_; }
    int classes() const { return spec_.classes; }

    // Trainable parameters in a stable order (layer-ascending). The STFT
    // basis tensors are deliberately absent: nothing can update them.
    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            LayerParams& p = lp_[i];
            const std::string base = "layer" + std::to_string(l.id) + ".";
            switch (l.kind) {
                case LayerKind::Relpv:
                    out.push_back({base + "w1", &p.relpv.w1});
                    if (p.relpv.bias) out.push_back({base + "b1", &p.relpv.b1});
                    out.push_back({base + "w4", &p.relpv.w4});
                    if (p.relpv.bias) out.push_back({base + "b4", &p.relpv.b4});
                    break;
                case LayerKind::Conv3d:
                    out.push_back({base + "w", &p.conv.weights});
                    if (p.conv.bias) out.push_back({base + "b", &p.conv.b});
                    break;
                case LayerKind::Fc:
                    out.push_back({base + "w", &p.fc_w});
                    out.push_back({base + "b", &p.fc_b});
                    break;
                case LayerKind::BatchNorm:
                    out.push_back({base + "gamma", &p.bn_gamma});
                    out.push_back({base + "beta", &p.bn_beta});
                    break;
                default:
                    break;
            }
        }
        return out;
    }

    // Everything persisted in a checkpoint: the trainable parameters plus
    // batch-norm running statistics.
    std::vector<ParamRef<T>> state_tensors() {
        std::vector<ParamRef<T>> out = parameters();
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            if (spec_.layers[i].kind != LayerKind::BatchNorm) continue;
            const std::string base = "layer" + std::to_string(spec_.layers[i].id) + ".";
            out.push_back({base + "running_mean", &lp_[i].bn_mean});
            out.push_back({base + "running_var", &lp_[i].bn_var});
        }
        return out;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.tensor->size();
        return n;
    }

    // Deterministic initialization: orthogonal weights, zero biases,
    // unit-gamma/zero-beta batch norm.
    void init_params(std::uint64_t seed) {
        Rng root(seed);
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            LayerParams& p = lp_[i];
            Rng r = root.child(static_cast<std::uint64_t>(l.id));
            switch (l.kind) {
                case LayerKind::Relpv:
                    p.relpv.w1 = orthogonal_init<T>(p.relpv.w1.shape(), r);
                    p.relpv.w4 = orthogonal_init<T>(p.relpv.w4.shape(), r);
                    p.relpv.b1.fill(T(0));
                    p.relpv.b4.fill(T(0));
                    break;
                case LayerKind::Conv3d:
                    p.conv.weights = orthogonal_init<T>(p.conv.weights.shape(), r);
                    p.conv.b.fill(T(0));
                    break;
                case LayerKind::Fc:
                    p.fc_w = orthogonal_init<T>(p.fc_w.shape(), r);
                    p.fc_b.fill(T(0));
                    break;
                case LayerKind::BatchNorm:
                    p.bn_gamma.fill(T(1));
                    p.bn_beta.fill(T(0));
                    p.bn_mean.fill(T(0));
                    p.bn_var.fill(T(1));
                    break;
                default:
                    break;
            }
        }
    }

    std::vector<LayerParams>& layer_params() { return lp_; }
    const std::vector<LayerParams>& layer_params() const { return lp_; }

private:
    void allocate() {
        lp_.resize(spec_.layers.size());
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            const int from = source_layer(l);
            const Shape& in = shapes_[static_cast<std::size_t>(from + 1)];
            LayerParams& p = lp_[i];
            switch (l.kind) {
                case LayerKind::Relpv: {
                    auto it = bases_.find(l.n);
                    if (it == bases_.end()) it = bases_.emplace(l.n, shared_basis(l.n)).first;
                    p.relpv = make_relpv_params<T>(in[0], l.f, l.n, l.stride, l.padding, true,
                                                   it->second);
                    break;
                }
                case LayerKind::Conv3d:
                    p.conv = make_conv3d_params<T>(in[0], l.f, l.n, l.stride, l.padding, true);
                    break;
                case LayerKind::Fc:
                    p.fc_w = Tensor<T>({l.units, in[0]});
                    p.fc_b = Tensor<T>({l.units});
                    break;
                case LayerKind::BatchNorm:
                    p.bn_gamma = Tensor<T>({in[0]});
                    p.bn_beta = Tensor<T>({in[0]});
                    p.bn_mean = Tensor<T>({in[0]});
                    p.bn_var = Tensor<T>({in[0]}, T(1));
                    break;
                default:
                    break;
            }
        }
    }

    ModelSpec spec_;
    std::vector<Shape> shapes_;
    std::map<int, std::shared_ptr<const StftBasis>> bases_;
    std::vector<LayerParams> lp_;
};

template <typename T>
struct BnBatchCache {
    std::vector<double> mean, inv_std;
    std::vector<Tensor<T>> xhat;
};

template <typename T>
struct BatchTape {
    bool training = false;
    // nodes[k][b]: output of node k-1 (k=0 is the input) for sample b
    std::vector<std::vector<Tensor<T>>> nodes;
    std::vector<std::vector<RelpvCache<T>>> relpv;  // indexed [layer][sample]
    std::vector<BnBatchCache<T>> bn;                // indexed [layer]
};

namespace detail {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // keep-fraction of the running statistic

template <typename T>
void batchnorm_forward(const LayerSpec& l, typename ModelInstance<T>::LayerParams& p,
                       const std::vector<Tensor<T>>& in, std::vector<Tensor<T>>& out,
                       bool training, BnBatchCache<T>* cache) {
    const std::size_t B = in.size();
    const std::size_t C = in[0].shape()[0];
    const std::size_t S = in[0].size() / C;
    const double N = static_cast<double>(B * S);
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    if (training) {
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* x = in[b].data() + c * S;
                for (std::size_t i = 0; i < S; ++i) s += static_cast<double>(x[i]);
            }
            mean[c] = s / N;
            double v = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* x = in[b].data() + c * S;
                for (std::size_t i = 0; i < S; ++i) {
                    const double d = static_cast<double>(x[i]) - mean[c];
                    v += d * d;
                }
            }
            var[c] = v / N;
            p.bn_mean[c] = static_cast<T>(kBnMomentum * static_cast<double>(p.bn_mean[c]) +
                                          (1.0 - kBnMomentum) * mean[c]);
            p.bn_var[c] = static_cast<T>(kBnMomentum * static_cast<double>(p.bn_var[c]) +
                                         (1.0 - kBnMomentum) * var[c]);
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = static_cast<double>(p.bn_mean[c]);
            var[c] = static_cast<double>(p.bn_var[c]);
        }
    }
    std::vector<double> inv_std(C);
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kBnEps);
    out.resize(B);
    if (cache) {
        cache->mean = mean;
        cache->inv_std = inv_std;
        cache->xhat.resize(B);
    }
    for (std::size_t b = 0; b < B; ++b) {
        out[b] = Tensor<T>(in[b].shape());
        Tensor<T>* xh = cache ? &cache->xhat[b] : nullptr;
        if (xh) *xh = Tensor<T>(in[b].shape());
        for (std::size_t c = 0; c < C; ++c) {
            const T* x = in[b].data() + c * S;
            T* y = out[b].data() + c * S;
            const double g = static_cast<double>(p.bn_gamma[c]);
            const double be = static_cast<double>(p.bn_beta[c]);
            for (std::size_t i = 0; i < S; ++i) {
                const double xhat = (static_cast<double>(x[i]) - mean[c]) * inv_std[c];
                if (xh) xh->data()[c * S + i] = static_cast<T>(xhat);
                y[i] = static_cast<T>(g * xhat + be);
            }
        }
    }
    (void)l;
}

}  // namespace detail

// Runs the graph on a batch; returns logits (B, K). With a tape, caches
// everything backward_batch needs. `training` selects batch statistics for
// batch norm (and updates the running ones).
template <typename T>
Tensor<T> forward_batch(ModelInstance<T>& M, const std::vector<const Tensor<T>*>& batch,
                        bool training, BatchTape<T>* tape = nullptr) {
    if (batch.empty()) throw ParameterError("empty batch");
    const ModelSpec& spec = M.spec();
    const std::size_t B = batch.size();
    BatchTape<T> local;
    BatchTape<T>& tp = tape ? *tape : local;
    tp.training = training;
    tp.nodes.assign(spec.layers.size() + 1, {});
    tp.relpv.assign(spec.layers.size(), {});
    tp.bn.assign(spec.layers.size(), {});
    tp.nodes[0].reserve(B);
    for (const Tensor<T>* x : batch) {
        if (x->shape() != spec.input)
            throw DimensionError("sample shape " + shape_to_string(x->shape()) +
                                 " does not match model input " + shape_to_string(spec.input));
        tp.nodes[0].push_back(*x);
    }

    int logits_node = static_cast<int>(spec.layers.size()) - 1;
    if (!spec.layers.empty() && spec.layers.back().kind == LayerKind::Softmax)
        --logits_node;
    if (logits_node < 0) throw ParameterError("model has no classifier layer");

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const int from = source_layer(l);
        const std::vector<Tensor<T>>& in = tp.nodes[static_cast<std::size_t>(from + 1)];
        std::vector<Tensor<T>>& out = tp.nodes[i + 1];
        auto& P = M.layer_params()[i];
        switch (l.kind) {
            case LayerKind::Relpv: {
                out.resize(B);
                if (tape) tp.relpv[i].resize(B);
                for (std::size_t b = 0; b < B; ++b)
                    out[b] = relpv_forward(in[b], P.relpv, tape ? &tp.relpv[i][b] : nullptr);
                break;
            }
            case LayerKind::Conv3d: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b) out[b] = conv3d_forward(in[b], P.conv);
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::AvgPool: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b)
                    out[b] = pool3d_aniso(in[b],
                                          l.kind == LayerKind::MaxPool ? PoolKind::Max : PoolKind::Avg,
                                          l.pool_size, l.pool_stride, spec.pool_rounding);
                break;
            }
            case LayerKind::Fc: {
                out.resize(B);
                const std::size_t U = l.units, I = P.fc_w.shape()[1];
                for (std::size_t b = 0; b < B; ++b) {
                    out[b] = Tensor<T>({U});
                    for (std::size_t u = 0; u < U; ++u) {
                        const T* w = P.fc_w.data() + u * I;
                        T acc = P.fc_b[u];
                        for (std::size_t k = 0; k < I; ++k) acc += w[k] * in[b][k];
                        out[b][u] = acc;
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b) out[b] = relu(in[b]);
                break;
            }
            case LayerKind::BatchNorm: {
                detail::batchnorm_forward<T>(l, P, in, out, training, tape ? &tp.bn[i] : nullptr);
                break;
            }
            case LayerKind::Flatten: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b) out[b] = in[b].reshaped({in[b].size()});
                break;
            }
            case LayerKind::Concat: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b) {
                    std::vector<const Tensor<T>*> parts;
                    for (int s : l.srcs)
                        parts.push_back(&tp.nodes[static_cast<std::size_t>(s + 1)][b]);
                    out[b] = concat_channels(parts);
                }
                break;
            }
            case LayerKind::SkipAdd: {
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b)
                    out[b] = add(in[b], tp.nodes[static_cast<std::size_t>(l.srcs[0] + 1)][b]);
                break;
            }
            case LayerKind::Softmax: {
                // evaluated by the loss / prediction consumer; forward just
                // exposes normalized probabilities for completeness
                out.resize(B);
                for (std::size_t b = 0; b < B; ++b) {
                    const Tensor<T>& z = in[b];
                    out[b] = Tensor<T>(z.shape());
                    double m = static_cast<double>(z[0]);
                    for (std::size_t k = 1; k < z.size(); ++k)
                        m = std::max(m, static_cast<double>(z[k]));
                    double sum = 0.0;
                    for (std::size_t k = 0; k < z.size(); ++k)
                        sum += std::exp(static_cast<double>(z[k]) - m);
                    for (std::size_t k = 0; k < z.size(); ++k)
                        out[b][k] = static_cast<T>(std::exp(static_cast<double>(z[k]) - m) / sum);
                }
                break;
            }
        }
    }

    const std::vector<Tensor<T>>& lg = tp.nodes[static_cast<std::size_t>(logits_node + 1)];
    const std::size_t K = lg[0].size();
    Tensor<T> logits({B, K});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < K; ++k) logits.at2(b, k) = lg[b][k];
    return logits;
}

// Gradients aligned with ModelInstance::parameters().
template <typename T>
std::vector<Tensor<T>> backward_batch(ModelInstance<T>& M, BatchTape<T>& tp,
                                      const Tensor<T>& grad_logits) {
    const ModelSpec& spec = M.spec();
    const std::size_t B = tp.nodes[0].size();
    require_rank(grad_logits, 2, "grad_logits");
    if (grad_logits.shape()[0] != B)
        throw DimensionError("grad_logits batch " + std::to_string(grad_logits.shape()[0]) +
                             " vs tape batch " + std::to_string(B));

    int logits_node = static_cast<int>(spec.layers.size()) - 1;
    if (!spec.layers.empty() && spec.layers.back().kind == LayerKind::Softmax) --logits_node;

    // per-node cotangents, allocated on first touch
    std::vector<std::vector<Tensor<T>>> ng(spec.layers.size() + 1);
    auto grad_at = [&](int node, std::size_t b, const Shape& shape) -> Tensor<T>& {
        auto& slot = ng[static_cast<std::size_t>(node + 1)];
        if (slot.empty()) slot.resize(B);
        if (slot[b].size() == 0) slot[b] = Tensor<T>(shape, T(0));
        return slot[b];
    };

    const std::size_t K = grad_logits.shape()[1];
    for (std::size_t b = 0; b < B; ++b) {
        Tensor<T>& g = grad_at(logits_node, b, Shape{K});
        for (std::size_t k = 0; k < K; ++k) g[k] += grad_logits.at2(b, k);
    }

    // gradient tensors aligned with parameters()
    auto params = M.parameters();
    std::vector<Tensor<T>> grads;
    grads.reserve(params.size());
    for (auto& p : params) grads.emplace_back(p.tensor->shape(), T(0));
    std::size_t cursor = grads.size();  // walk parameters() backwards, layer by layer

    for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
        const LayerSpec& l = spec.layers[static_cast<std::size_t>(li)];
        auto& P = M.layer_params()[static_cast<std::size_t>(li)];
        // number of parameter tensors this layer contributed
        std::size_t nparams = 0;
        switch (l.kind) {
            case LayerKind::Relpv:
                nparams = 2 + (P.relpv.bias ? 2 : 0);
                break;
            case LayerKind::Conv3d:
                nparams = 1 + (P.conv.bias ? 1 : 0);
                break;
            case LayerKind::Fc:
                nparams = 2;
                break;
            case LayerKind::BatchNorm:
                nparams = 2;
                break;
            default:
                nparams = 0;
        }
        cursor -= nparams;
        if (l.kind == LayerKind::Softmax) continue;  // fused into the loss
        auto& gouts = ng[static_cast<std::size_t>(li) + 1];
        if (gouts.empty()) continue;  // no cotangent reached this node
        const int from = source_layer(l);
        const std::vector<Tensor<T>>& in = tp.nodes[static_cast<std::size_t>(from + 1)];
        const std::vector<Tensor<T>>& out = tp.nodes[static_cast<std::size_t>(li) + 1];

        switch (l.kind) {
            case LayerKind::Relpv: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    RelpvGrads<T> g = relpv_backward(gouts[b], in[b], P.relpv,
                                                     tp.relpv[static_cast<std::size_t>(li)][b]);
                    std::size_t c = cursor;
                    auto acc = [&](const Tensor<T>& src) {
                        Tensor<T>& dst = grads[c++];
                        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                    };
                    acc(g.w1);
                    if (P.relpv.bias) acc(g.b1);
                    acc(g.w4);
                    if (P.relpv.bias) acc(g.b4);
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += g.input[k];
                }
                break;
            }
            case LayerKind::Conv3d: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Conv3dGrads<T> g = conv3d_backward(gouts[b], in[b], P.conv);
                    Tensor<T>& gw = grads[cursor];
                    for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += g.weights[k];
                    if (P.conv.bias) {
                        Tensor<T>& gb = grads[cursor + 1];
                        for (std::size_t k = 0; k < gb.size(); ++k) gb[k] += g.b[k];
                    }
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += g.input[k];
                }
                break;
            }
            case LayerKind::MaxPool: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    const Tensor<T>& x = in[b];
                    const Shape& os = out[b].shape();
                    const std::size_t C = os[0];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t od = 0; od < os[1]; ++od)
                            for (std::size_t oh = 0; oh < os[2]; ++oh)
                                for (std::size_t ow = 0; ow < os[3]; ++ow) {
                                    const T gv = gouts[b].at4(c, od, oh, ow);
                                    if (gv == T(0)) continue;
                                    const std::size_t d0 = od * l.pool_stride[0];
                                    const std::size_t h0 = oh * l.pool_stride[1];
                                    const std::size_t w0 = ow * l.pool_stride[2];
                                    const std::size_t d1 = std::min(d0 + l.pool_size[0], x.shape()[1]);
                                    const std::size_t h1 = std::min(h0 + l.pool_size[1], x.shape()[2]);
                                    const std::size_t w1 = std::min(w0 + l.pool_size[2], x.shape()[3]);
                                    // route to the first cell attaining the max
                                    T best = std::numeric_limits<T>::lowest();
                                    std::size_t bd = d0, bh = h0, bw = w0;
                                    for (std::size_t d = d0; d < d1; ++d)
                                        for (std::size_t h = h0; h < h1; ++h)
                                            for (std::size_t w = w0; w < w1; ++w)
                                                if (x.at4(c, d, h, w) > best) {
                                                    best = x.at4(c, d, h, w);
                                                    bd = d; bh = h; bw = w;
                                                }
                                    gi.at4(c, bd, bh, bw) += gv;
                                }
                }
                break;
            }
            case LayerKind::AvgPool: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    const Shape& os = out[b].shape();
                    for (std::size_t c = 0; c < os[0]; ++c)
                        for (std::size_t od = 0; od < os[1]; ++od)
                            for (std::size_t oh = 0; oh < os[2]; ++oh)
                                for (std::size_t ow = 0; ow < os[3]; ++ow) {
                                    const T gv = gouts[b].at4(c, od, oh, ow);
                                    if (gv == T(0)) continue;
                                    const std::size_t d0 = od * l.pool_stride[0];
                                    const std::size_t h0 = oh * l.pool_stride[1];
                                    const std::size_t w0 = ow * l.pool_stride[2];
                                    const std::size_t d1 = std::min(d0 + l.pool_size[0], in[b].shape()[1]);
                                    const std::size_t h1 = std::min(h0 + l.pool_size[1], in[b].shape()[2]);
                                    const std::size_t w1 = std::min(w0 + l.pool_size[2], in[b].shape()[3]);
                                    const T share = gv / static_cast<T>((d1 - d0) * (h1 - h0) * (w1 - w0));
                                    for (std::size_t d = d0; d < d1; ++d)
                                        for (std::size_t h = h0; h < h1; ++h)
                                            for (std::size_t w = w0; w < w1; ++w)
                                                gi.at4(c, d, h, w) += share;
                                }
                }
                break;
            }
            case LayerKind::Fc: {
                const std::size_t U = l.units, I = P.fc_w.shape()[1];
                Tensor<T>& gw = grads[cursor];
                Tensor<T>& gb = grads[cursor + 1];
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    const Tensor<T>& go = gouts[b];
                    for (std::size_t u = 0; u < U; ++u) {
                        const T g = go[u];
                        if (g == T(0)) continue;
                        T* wrow = gw.data() + u * I;
                        for (std::size_t k = 0; k < I; ++k) wrow[k] += g * in[b][k];
                        gb[u] += g;
                    }
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < I; ++k) {
                        T acc = T(0);
                        for (std::size_t u = 0; u < U; ++u) acc += P.fc_w.data()[u * I + k] * go[u];
                        gi[k] += acc;
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < gi.size(); ++k)
                        if (in[b][k] > T(0)) gi[k] += gouts[b][k];
                }
                break;
            }
            case LayerKind::BatchNorm: {
                const BnBatchCache<T>& c = tp.bn[static_cast<std::size_t>(li)];
                if (c.xhat.empty())
                    throw ParameterError("batchnorm backward requires a training-mode tape");
                const std::size_t C = in[0].shape()[0];
                const std::size_t S = in[0].size() / C;
                const double N = static_cast<double>(B * S);
                Tensor<T>& ggamma = grads[cursor];
                Tensor<T>& gbeta = grads[cursor + 1];
                for (std::size_t ch = 0; ch < C; ++ch) {
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (std::size_t b = 0; b < B; ++b) {
                        if (gouts[b].size() == 0) continue;
                        const T* go = gouts[b].data() + ch * S;
                        const T* xh = c.xhat[b].data() + ch * S;
                        for (std::size_t i = 0; i < S; ++i) {
                            sum_g += static_cast<double>(go[i]);
                            sum_gx += static_cast<double>(go[i]) * static_cast<double>(xh[i]);
                        }
                    }
                    ggamma[ch] += static_cast<T>(sum_gx);
                    gbeta[ch] += static_cast<T>(sum_g);
                    const double gam = static_cast<double>(P.bn_gamma[ch]);
                    const double istd = c.inv_std[ch];
                    for (std::size_t b = 0; b < B; ++b) {
                        Tensor<T>& gi = grad_at(from, b, in[b].shape());
                        const T* go = gouts[b].size() == 0 ? nullptr : gouts[b].data() + ch * S;
                        const T* xh = c.xhat[b].data() + ch * S;
                        T* gid = gi.data() + ch * S;
                        for (std::size_t i = 0; i < S; ++i) {
                            const double g = go ? static_cast<double>(go[i]) : 0.0;
                            const double dx =
                                gam * istd *
                                (g - sum_g / N - static_cast<double>(xh[i]) * sum_gx / N);
                            gid[i] += static_cast<T>(dx);
                        }
                    }
                }
                break;
            }
            case LayerKind::Flatten: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Tensor<T>& gi = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += gouts[b][k];
                }
                break;
            }
            case LayerKind::Concat: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    std::size_t off = 0;
                    for (int s : l.srcs) {
                        const Tensor<T>& src = tp.nodes[static_cast<std::size_t>(s + 1)][b];
                        Tensor<T>& gi = grad_at(s, b, src.shape());
                        for (std::size_t k = 0; k < src.size(); ++k) gi[k] += gouts[b][off + k];
                        off += src.size();
                    }
                }
                break;
            }
            case LayerKind::SkipAdd: {
                for (std::size_t b = 0; b < B; ++b) {
                    if (gouts[b].size() == 0) continue;
                    Tensor<T>& g1 = grad_at(from, b, in[b].shape());
                    for (std::size_t k = 0; k < g1.size(); ++k) g1[k] += gouts[b][k];
                    const Tensor<T>& src = tp.nodes[static_cast<std::size_t>(l.srcs[0] + 1)][b];
                    Tensor<T>& g2 = grad_at(l.srcs[0], b, src.shape());
                    for (std::size_t k = 0; k < g2.size(); ++k) g2[k] += gouts[b][k];
                }
                break;
            }
            case LayerKind::Softmax:
                break;
        }
    }
    return grads;
}

}  // namespace relpv
