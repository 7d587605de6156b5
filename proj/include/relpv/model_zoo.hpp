#pragma once

// Builders for the benchmark architectures, at two scales:
//
//   Paper  - the published input geometries (video clips 3x16x112x112,
//            voxel grids 1x32x32x32) and layer widths.
//   Desk   - the same topologies shrunk for laptop-class experiments:
//            clip input 1x8x32x32, conv/block widths divided by 4,
//            fully-connected widths divided by 2, 5 classes by default.
//
// Families:
//   mc3d        five conv3d(n)+ReLU stages with max-pooling between
//               (first pool 1x2x2 with unit temporal stride), then
//               FC-FC-FC-softmax.
//   lp_mc3d     the same skeleton with each conv3d(n,f)+ReLU pair replaced
//               by a ReLPV(n,f) block. Its trainable parameter total does
//               not depend on n.
//   lp_mc3d_f   constant-width variant: five ReLPV(n,f) blocks, a trailing
//               1x1x1 conv back to the paper width, then the same classifier.
//   hybrid      mc3d with the first k (from the input) or last k (from the
//               classifier) stages converted to ReLPV blocks.
//   voxnet      two valid-padded conv stages (5^3 stride 2, then 3^3),
//               max-pool, FC(128), FC(K); lp_voxnet swaps the convs for
//               valid-padded ReLPV blocks.
//   lp3dcnn     multi-window blocks: parallel ReLPV(3) and ReLPV(5) branches
//               (plus a 1x1x1 conv branch after the stem) concatenated, with
//               a 1x1x1 projection skip added, batch-normalized, ReLU'd, and
//               pooled between blocks; 1x1x1 conv head and a 3-layer
//               classifier.

#include <cstddef>
#include <string>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/model_spec.hpp"

namespace relpv {

enum class Scale { Paper, Desk };

enum class HybridSide { FromTop, FromBottom };  // top = input side

namespace detail {

struct McConfig {
    Shape input;
    std::array<std::size_t, 5> widths;
    std::array<std::size_t, 2> fc;
    int classes;
};

inline McConfig mc_config(Scale scale, int classes) {
    if (scale == Scale::Paper)
        return {{3, 16, 112, 112}, {64, 128, 256, 256, 256}, {2048, 2048},
                classes > 0 ? classes : 101};
    return {{1, 8, 32, 32}, {16, 32, 64, 64, 64}, {1024, 1024}, classes > 0 ? classes : 5};
}

inline LayerSpec pool_layer(int id, std::size_t sd, std::size_t shw) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::MaxPool;
    l.pool_size = {sd, shw, shw};
    l.pool_stride = {sd, shw, shw};
    return l;
}

inline LayerSpec conv_layer(int id, int n, std::size_t f, std::size_t stride = 1,
                            Padding padding = Padding::SameZero, int from = -1) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Conv3d;
    l.n = n;
    l.f = f;
    l.stride = stride;
    l.padding = padding;
    l.from = from;
    return l;
}

inline LayerSpec relpv_layer(int id, int n, std::size_t f, std::size_t stride = 1,
                             Padding padding = Padding::SameReplicate, int from = -1) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Relpv;
    l.n = n;
    l.f = f;
    l.stride = stride;
    l.padding = padding;
    l.from = from;
    return l;
}

inline LayerSpec simple_layer(int id, LayerKind kind, int from = -1) {
    LayerSpec l;
    l.id = id;
    l.kind = kind;
    l.from = from;
    return l;
}

inline LayerSpec fc_layer(int id, std::size_t units) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Fc;
    l.units = units;
    return l;
}

// Shared skeleton for mc3d / lp_mc3d / hybrids: stage i is either
// conv3d(n)+ReLU or a ReLPV block, each followed by max-pooling.
inline ModelSpec mc_skeleton(const std::string& name, int n, const McConfig& cfg,
                             const std::array<bool, 5>& use_relpv) {
    ModelSpec m;
    m.name = name;
    m.input = cfg.input;
    m.classes = cfg.classes;
    m.pool_rounding = PoolRounding::Ceil;
    int id = 0;
    for (int s = 0; s < 5; ++s) {
        if (use_relpv[static_cast<std::size_t>(s)]) {
            m.layers.push_back(relpv_layer(id++, n, cfg.widths[static_cast<std::size_t>(s)]));
        } else {
            m.layers.push_back(conv_layer(id++, n, cfg.widths[static_cast<std::size_t>(s)]));
            m.layers.push_back(simple_layer(id++, LayerKind::Relu));
        }
        m.layers.push_back(s == 0 ? pool_layer(id++, 1, 2) : pool_layer(id++, 2, 2));
    }
    m.layers.push_back(simple_layer(id++, LayerKind::Flatten));
    m.layers.push_back(fc_layer(id++, cfg.fc[0]));
    m.layers.push_back(simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(fc_layer(id++, cfg.fc[1]));
    m.layers.push_back(simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(fc_layer(id++, static_cast<std::size_t>(cfg.classes)));
    m.layers.push_back(simple_layer(id++, LayerKind::Softmax));
    infer_shapes(m);
    return m;
}

}  // namespace detail

inline ModelSpec build_mc3d(int n, Scale scale = Scale::Paper, int classes = 0) {
    if (n < 3 || n % 2 == 0) throw ParameterError("mc3d needs odd n >= 3");
    const auto cfg = detail::mc_config(scale, classes);
    const std::string name =
        "mc3d_" + std::to_string(n) + (scale == Scale::Desk ? "_desk" : "");
    return detail::mc_skeleton(name, n, cfg, {false, false, false, false, false});
}

inline ModelSpec build_lp_mc3d(int n, Scale scale = Scale::Paper, int classes = 0) {
    if (n < 3 || n % 2 == 0) throw ParameterError("lp_mc3d needs odd n >= 3");
    const auto cfg = detail::mc_config(scale, classes);
    const std::string name =
        "lp_mc3d_" + std::to_string(n) + (scale == Scale::Desk ? "_desk" : "");
    return detail::mc_skeleton(name, n, cfg, {true, true, true, true, true});
}

// Hybrid: k stages converted to ReLPV blocks, counted from the input side
// (FromTop) or the classifier side (FromBottom). k = 5 from either side is
// exactly build_lp_mc3d.
inline ModelSpec build_hybrid(int n, int k, HybridSide side, Scale scale = Scale::Paper,
                              int classes = 0) {
    if (k < 0 || k > 5) throw ParameterError("hybrid depth must be in 0..5");
    const auto cfg = detail::mc_config(scale, classes);
    std::array<bool, 5> use{};
    for (int s = 0; s < 5; ++s)
        use[static_cast<std::size_t>(s)] = side == HybridSide::FromTop ? s < k : s >= 5 - k;
    const std::string name = "mc3d_" + std::to_string(n) + "_" +
                             (side == HybridSide::FromTop ? "t" : "b") + std::to_string(k) +
                             (scale == Scale::Desk ? "_desk" : "");
    return detail::mc_skeleton(name, n, cfg, use);
}

// Constant-width family: five ReLPV(n, f) blocks, a 1x1x1 conv back to the
// paper width, one more pool, then the standard classifier.
inline ModelSpec build_lp_mc3d_f(int n, std::size_t f, Scale scale = Scale::Paper,
                                 int classes = 0) {
    if (n < 3 || n % 2 == 0) throw ParameterError("lp_mc3d_f needs odd n >= 3");
    if (f == 0) throw ParameterError("lp_mc3d_f needs f >= 1");
    const auto cfg = detail::mc_config(scale, classes);
    const std::size_t head = cfg.widths[4];  // width restored by the 1x1x1 conv
    ModelSpec m;
    m.name = "lp_mc3d_" + std::to_string(n) + "_f" + std::to_string(f) +
             (scale == Scale::Desk ? "_desk" : "");
    m.input = cfg.input;
    m.classes = cfg.classes;
    m.pool_rounding = PoolRounding::Ceil;
    int id = 0;
    for (int s = 0; s < 5; ++s) {
        m.layers.push_back(detail::relpv_layer(id++, n, f));
        if (s < 4)
            m.layers.push_back(s == 0 ? detail::pool_layer(id++, 1, 2)
                                      : detail::pool_layer(id++, 2, 2));
    }
    m.layers.push_back(detail::conv_layer(id++, 1, head));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::pool_layer(id++, 2, 2));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Flatten));
    m.layers.push_back(detail::fc_layer(id++, cfg.fc[0]));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::fc_layer(id++, cfg.fc[1]));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::fc_layer(id++, static_cast<std::size_t>(cfg.classes)));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Softmax));
    infer_shapes(m);
    return m;
}

enum class VoxnetVariant { Conv, Relpv };

// Occupancy-grid classifier: valid padding throughout, floor pooling.
inline ModelSpec build_voxnet_family(VoxnetVariant v, int classes = 40, Scale scale = Scale::Paper) {
    ModelSpec m;
    const bool lp = v == VoxnetVariant::Relpv;
    m.name = lp ? "lp_voxnet" : "voxnet";
    m.input = {1, 32, 32, 32};
    std::size_t w = 32, fc = 128;
    if (scale == Scale::Desk) {
        m.name += "_desk";
        m.input = {1, 16, 16, 16};
        w = 8;
        fc = 64;
        if (classes == 40) classes = 5;
    }
    m.classes = classes;
    m.pool_rounding = PoolRounding::Floor;
    int id = 0;
    if (lp) {
        m.layers.push_back(detail::relpv_layer(id++, 5, w, 2, Padding::Valid));
        m.layers.push_back(detail::relpv_layer(id++, 3, w, 1, Padding::Valid));
    } else {
        m.layers.push_back(detail::conv_layer(id++, 5, w, 2, Padding::Valid));
        m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
        m.layers.push_back(detail::conv_layer(id++, 3, w, 1, Padding::Valid));
        m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    }
    m.layers.push_back(detail::pool_layer(id++, 2, 2));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Flatten));
    m.layers.push_back(detail::fc_layer(id++, fc));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::fc_layer(id++, static_cast<std::size_t>(classes)));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Softmax));
    infer_shapes(m);
    return m;
}

// Multi-window architecture with projection skips.
inline ModelSpec build_lp3dcnn(Scale scale = Scale::Paper, int classes = 0) {
    const bool desk = scale == Scale::Desk;
    ModelSpec m;
    m.name = desk ? "lp3dcnn_desk" : "lp3dcnn";
    m.input = desk ? Shape{1, 16, 16, 16} : Shape{1, 32, 32, 32};
    m.classes = classes > 0 ? classes : (desk ? 5 : 40);
    m.pool_rounding = PoolRounding::Ceil;
    const std::size_t bw = desk ? 32 : 128;   // per-branch width
    const std::size_t cw = 3 * bw;            // concat width in the inner blocks
    const std::size_t head = desk ? 64 : 256; // 1x1x1 head width
    const std::size_t fc = desk ? 256 : 512;
    int id = 0;
    // stem block: two parallel windows over the raw volume
    const int input_node = kFromInput;
    m.layers.push_back(detail::relpv_layer(id++, 3, bw, 1, Padding::SameReplicate, input_node));
    m.layers.push_back(detail::relpv_layer(id++, 5, bw, 1, Padding::SameReplicate, input_node));
    {
        LayerSpec cat = detail::simple_layer(id++, LayerKind::Concat);
        cat.srcs = {0, 1};
        m.layers.push_back(cat);
    }
    m.layers.push_back(detail::simple_layer(id++, LayerKind::BatchNorm));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::pool_layer(id++, 2, 2));
    int block_in = id - 1;  // node carrying the pooled activations
    // four multi-window blocks; pooling between consecutive blocks
    for (int u = 0; u < 4; ++u) {
        const int a = id;
        m.layers.push_back(detail::relpv_layer(id++, 3, bw, 1, Padding::SameReplicate, block_in));
        const int b = id;
        m.layers.push_back(detail::relpv_layer(id++, 5, bw, 1, Padding::SameReplicate, block_in));
        const int c = id;
        m.layers.push_back(detail::conv_layer(id++, 1, bw, 1, Padding::SameZero, block_in));
        {
            LayerSpec cat = detail::simple_layer(id++, LayerKind::Concat);
            cat.srcs = {a, b, c};
            m.layers.push_back(cat);
        }
        const int proj = id;
        m.layers.push_back(detail::conv_layer(id++, 1, cw, 1, Padding::SameZero, block_in));
        {
            LayerSpec sk = detail::simple_layer(id++, LayerKind::SkipAdd, proj - 1);
            sk.srcs = {proj};
            m.layers.push_back(sk);
        }
        m.layers.push_back(detail::simple_layer(id++, LayerKind::BatchNorm));
        m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
        if (u < 3) {
            m.layers.push_back(detail::pool_layer(id++, 2, 2));
        }
        block_in = id - 1;
    }
    // head
    m.layers.push_back(detail::conv_layer(id++, 1, head));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::BatchNorm));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Flatten));
    m.layers.push_back(detail::fc_layer(id++, fc));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::fc_layer(id++, fc));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Relu));
    m.layers.push_back(detail::fc_layer(id++, static_cast<std::size_t>(m.classes)));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Softmax));
    infer_shapes(m);
    return m;
}

}  // namespace relpv
