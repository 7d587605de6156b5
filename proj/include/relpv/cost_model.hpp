#pragma once

// Analytic parameter and FLOP accounting.
//
// Parameter savings of one ReLPV block versus the dense conv it replaces:
//     (c * n^3 * f) / (c + 26 f)        [bias-free counts]
// returned as an exact reduced rational.
//
// FLOP convention (also printed by the CLI): each trainable parameter
// (weights and biases alike) contributes one multiply and one add per
// application; a ReLPV block additionally charges 2 * (13 frequencies *
// 3 axes * n taps) for its fixed separable factors plus 26 ops for its
// internal ReLU; parameterless layers (pool, ReLU, softmax, skip-add) cost
// one op per output channel; flatten and concat are free. Spatial position
// counts are deliberately not multiplied in: the figure tracks the cost of
// applying the operator once, which is the regime where the ReLPV totals
// stay nearly flat in n while dense conv totals grow as n^3.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/model_spec.hpp"

namespace relpv {

struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Bias-free parameter ratio dense-conv / ReLPV for one block.
inline Rational savings_ratio(int n, std::size_t c, std::size_t f) {
    if (n < 1 || c == 0 || f == 0) throw ParameterError("savings_ratio needs n,c,f >= 1");
    const std::uint64_t k = static_cast<std::uint64_t>(n);
    Rational r;
    r.num = static_cast<std::uint64_t>(c) * k * k * k * static_cast<std::uint64_t>(f);
    r.den = static_cast<std::uint64_t>(c) + 26ull * static_cast<std::uint64_t>(f);
    const std::uint64_t g = std::gcd(r.num, r.den);
    r.num /= g;
    r.den /= g;
    return r;
}

struct LayerCost {
    int id = -1;
    std::string kind;
    std::size_t params = 0;        // trainable parameters (with biases if enabled)
    std::size_t flops = 0;
    Shape out_shape;
};

struct CostReport {
    std::vector<LayerCost> layers;
    std::size_t total_params = 0;
    std::size_t total_flops = 0;
    std::size_t model_bytes = 0;  // total_params * bytes per scalar
};

inline const char* flop_convention_text() {
    return "FLOP convention: each trainable parameter (weights and biases) counts one multiply "
           "and one add per application; ReLPV adds 2*(13*3*n) for its fixed separable factors "
           "and 26 ops for its internal ReLU; parameterless layers cost one op per output "
           "channel; flatten and concat are free. Spatial replication is not multiplied in.";
}

inline CostReport cost_report(const ModelSpec& m, bool with_bias = true,
                              std::size_t bytes_per_scalar = 4) {
    const std::vector<Shape> shapes = infer_shapes(m);
    CostReport rep;
    for (const LayerSpec& l : m.layers) {
        const int from = source_layer(l);
        const Shape& in = shapes[static_cast<std::size_t>(from + 1)];
        const Shape& out = shapes[static_cast<std::size_t>(l.id + 1)];
        LayerCost lc;
        lc.id = l.id;
        lc.kind = layer_kind_name(l.kind);
        lc.out_shape = out;
        switch (l.kind) {
            case LayerKind::Relpv: {
                const std::size_t c = in[0], f = l.f;
                lc.params = with_bias ? c + 1 + 26 * f + f : c + 26 * f;
                lc.flops = 2 * (c + 1 + 26 * f + f) +
                           2 * (13ull * 3ull * static_cast<std::size_t>(l.n)) + 26;
                break;
            }
            case LayerKind::Conv3d: {
                const std::size_t c = in[0], f = l.f;
                const std::size_t k = static_cast<std::size_t>(l.n);
                lc.params = c * k * k * k * f + (with_bias ? f : 0);
                lc.flops = 2 * (c * k * k * k * f + f);
                break;
            }
            case LayerKind::Fc: {
                lc.params = in[0] * l.units + (with_bias ? l.units : 0);
                lc.flops = 2 * (in[0] * l.units + l.units);
                break;
            }
            case LayerKind::BatchNorm: {
                lc.params = 2 * in[0];
                lc.flops = 2 * (2 * in[0]) + in[0];
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::AvgPool:
            case LayerKind::Relu:
            case LayerKind::SkipAdd:
            case LayerKind::Softmax: {
                lc.params = 0;
                lc.flops = out[0];
                break;
            }
            case LayerKind::Flatten:
            case LayerKind::Concat: {
                lc.params = 0;
                lc.flops = 0;
                break;
            }
        }
        rep.total_params += lc.params;
        rep.total_flops += lc.flops;
        rep.layers.push_back(std::move(lc));
    }
    rep.model_bytes = rep.total_params * bytes_per_scalar;
    return rep;
}

inline std::size_t count_params(const ModelSpec& m, bool with_bias = true) {
    return cost_report(m, with_bias).total_params;
}

inline std::size_t count_flops(const ModelSpec& m) { return cost_report(m).total_flops; }

// Same model evaluated on a different input geometry (affects flattened
// fan-ins and therefore FC parameter/FLOP totals).
inline std::size_t count_flops(const ModelSpec& m, const Shape& input) {
    ModelSpec copy = m;
    copy.input = input;
    return cost_report(copy).total_flops;
}

}  // namespace relpv
