#pragma once

// Shared building-block operations on (c,d,h,w) feature maps: 1-D convolution
// along a chosen spatial axis, 1x1x1 (pointwise) convolution, ReLU, pooling,
// channel concatenation, elementwise add, and fused softmax cross-entropy.
//
// conv1d_axis uses cross-correlation orientation: out(x) = sum_k k(t) in(x*s + t - pad).
// All reductions run in a fixed order so results are bitwise reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/tensor.hpp"

namespace relpv {

enum class Axis { Depth = 0, Height = 1, Width = 2 };

enum class Padding { SameZero, SameReplicate, Valid };

enum class PoolKind { Max, Avg };

enum class PoolRounding { Floor, Ceil };

inline std::size_t conv_out_extent(std::size_t in, std::size_t window, std::size_t stride,
                                   Padding padding) {
    if (stride == 0) throw ParameterError("stride must be >= 1");
    if (padding == Padding::Valid) {
        if (in < window)
            throw DimensionError("valid convolution needs extent >= window (" +
                                 std::to_string(in) + " < " + std::to_string(window) + ")");
        return (in - window) / stride + 1;
    }
    return (in + stride - 1) / stride;  // ceil(in / stride)
}

// 1-D convolution of every fiber along `axis`. Kernel index runs 0..n-1 with
// the tap offset t - n/2 relative to the output position (odd n centers it).
// Accumulation is in double regardless of T.
template <typename T>
Tensor<T> conv1d_axis(const Tensor<T>& in, std::span<const T> kernel, Axis axis,
                      std::size_t stride = 1, Padding padding = Padding::SameZero) {
    require_rank(in, 4, "conv1d_axis input");
    const std::size_t n = kernel.size();
    if (n == 0) throw ParameterError("empty kernel");
    const std::size_t ax = static_cast<std::size_t>(axis) + 1;  // spatial axes are 1..3
    const std::size_t L = in.shape()[ax];
    const std::size_t outL = conv_out_extent(L, n, stride, padding);

    Shape out_shape = in.shape();
    out_shape[ax] = outL;
    Tensor<T> out(out_shape);

    // Strides (in elements) of the input/output along each of the 4 axes.
    const auto strides_of = [](const Shape& s) {
        std::array<std::size_t, 4> st{};
        st[3] = 1;
        st[2] = s[3];
        st[1] = s[2] * s[3];
        st[0] = s[1] * s[2] * s[3];
        return st;
    };
    const auto ist = strides_of(in.shape());
    const auto ost = strides_of(out.shape());

    // The two spatial axes orthogonal to `ax`, plus the channel axis.
    std::array<std::size_t, 3> outer{};
    {
        std::size_t k = 0;
        for (std::size_t a = 0; a < 4; ++a)
            if (a != ax) outer[k++] = a;
    }
    const std::ptrdiff_t center = padding == Padding::Valid
                                      ? 0
                                      : -static_cast<std::ptrdiff_t>(n / 2);
    const T* src = in.data();
    T* dst = out.data();
    for (std::size_t o0 = 0; o0 < in.shape()[outer[0]]; ++o0)
        for (std::size_t o1 = 0; o1 < in.shape()[outer[1]]; ++o1)
            for (std::size_t o2 = 0; o2 < in.shape()[outer[2]]; ++o2) {
                const std::size_t ibase =
                    o0 * ist[outer[0]] + o1 * ist[outer[1]] + o2 * ist[outer[2]];
                const std::size_t obase =
                    o0 * ost[outer[0]] + o1 * ost[outer[1]] + o2 * ost[outer[2]];
                for (std::size_t x = 0; x < outL; ++x) {
                    double acc = 0.0;
                    const std::ptrdiff_t origin =
                        static_cast<std::ptrdiff_t>(x * stride) + center;
                    for (std::size_t t = 0; t < n; ++t) {
                        std::ptrdiff_t p = origin + static_cast<std::ptrdiff_t>(t);
                        if (p < 0 || p >= static_cast<std::ptrdiff_t>(L)) {
                            if (padding == Padding::SameZero) continue;
                            p = std::clamp<std::ptrdiff_t>(p, 0,
                                                           static_cast<std::ptrdiff_t>(L) - 1);
                        }
                        acc += static_cast<double>(kernel[t]) *
                               static_cast<double>(src[ibase + static_cast<std::size_t>(p) * ist[ax]]);
                    }
                    dst[obase + x * ost[ax]] = static_cast<T>(acc);
                }
            }
    return out;
}

// 1x1x1 convolution: out[f] = sum_c weights(f,c) in[c] (+ bias[f]).
// weights has shape (f, c); bias, if given, has shape (f).
template <typename T>
Tensor<T> pointwise_conv(const Tensor<T>& in, const Tensor<T>& weights,
                         const Tensor<T>* bias = nullptr) {
    require_rank(in, 4, "pointwise_conv input");
    require_rank(weights, 2, "pointwise_conv weights");
    const std::size_t c = in.shape()[0];
    const std::size_t f = weights.shape()[0];
    if (weights.shape()[1] != c)
        throw DimensionError("pointwise_conv: weights " + shape_to_string(weights.shape()) +
                             " vs input channels " + std::to_string(c));
    if (bias && (bias->rank() != 1 || bias->shape()[0] != f))
        throw DimensionError("pointwise_conv: bias shape " + shape_to_string(bias->shape()) +
                             " vs " + std::to_string(f) + " filters");
    Shape os = in.shape();
    os[0] = f;
    Tensor<T> out(os);
    const std::size_t plane = in.shape()[1] * in.shape()[2] * in.shape()[3];
    for (std::size_t k = 0; k < f; ++k) {
        T* dst = out.data() + k * plane;
        const T b = bias ? (*bias)[k] : T(0);
        for (std::size_t p = 0; p < plane; ++p) dst[p] = b;
        for (std::size_t j = 0; j < c; ++j) {
            const T w = weights.at2(k, j);
            const T* src = in.data() + j * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] += w * src[p];
        }
    }
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& in) {
    Tensor<T> out = in;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < T(0)) out[i] = T(0);
    return out;
}

// Pooling with independently sized axes. Ceil rounding lets the last window
// hang over the edge; max ignores the missing cells and avg divides by the
// number of cells actually covered.
template <typename T>
Tensor<T> pool3d_aniso(const Tensor<T>& in, PoolKind kind, std::array<std::size_t, 3> size,
                       std::array<std::size_t, 3> stride, PoolRounding rounding) {
    require_rank(in, 4, "pool3d input");
    for (int a = 0; a < 3; ++a) {
        if (size[a] == 0 || stride[a] == 0) throw ParameterError("pool size/stride must be >= 1");
        if (size[a] > in.shape()[a + 1] && rounding == PoolRounding::Floor)
            throw DimensionError("pool window exceeds extent on axis " + std::to_string(a) +
                                 " for shape " + shape_to_string(in.shape()));
    }
    Shape os = in.shape();
    for (int a = 0; a < 3; ++a) {
        const std::size_t L = in.shape()[a + 1];
        os[a + 1] = rounding == PoolRounding::Floor
                        ? (L - size[a]) / stride[a] + 1
                        : (L + stride[a] - 1) / stride[a];
        // ceil variant: ceil(L / stride) windows, each clipped to the volume
        if (rounding == PoolRounding::Ceil) {
            // drop windows that start past the end
            while ((os[a + 1] - 1) * stride[a] >= L) --os[a + 1];
        }
    }
    Tensor<T> out(os);
    const std::size_t C = in.shape()[0];
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t od = 0; od < os[1]; ++od)
            for (std::size_t oh = 0; oh < os[2]; ++oh)
                for (std::size_t ow = 0; ow < os[3]; ++ow) {
                    const std::size_t d0 = od * stride[0], h0 = oh * stride[1], w0 = ow * stride[2];
                    const std::size_t d1 = std::min(d0 + size[0], in.shape()[1]);
                    const std::size_t h1 = std::min(h0 + size[1], in.shape()[2]);
                    const std::size_t w1 = std::min(w0 + size[2], in.shape()[3]);
                    if (kind == PoolKind::Max) {
                        T m = std::numeric_limits<T>::lowest();
                        for (std::size_t d = d0; d < d1; ++d)
                            for (std::size_t h = h0; h < h1; ++h)
                                for (std::size_t w = w0; w < w1; ++w)
                                    m = std::max(m, in.at4(c, d, h, w));
                        out.at4(c, od, oh, ow) = m;
                    } else {
                        double s = 0.0;
                        std::size_t cnt = 0;
                        for (std::size_t d = d0; d < d1; ++d)
                            for (std::size_t h = h0; h < h1; ++h)
                                for (std::size_t w = w0; w < w1; ++w, ++cnt)
                                    s += static_cast<double>(in.at4(c, d, h, w));
                        out.at4(c, od, oh, ow) = static_cast<T>(s / static_cast<double>(cnt));
                    }
                }
    return out;
}

template <typename T>
Tensor<T> pool3d(const Tensor<T>& in, PoolKind kind, std::size_t size, std::size_t stride,
                 PoolRounding rounding = PoolRounding::Ceil) {
    return pool3d_aniso(in, kind, {size, size, size}, {stride, stride, stride}, rounding);
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
    if (parts.empty()) throw ParameterError("concat_channels: no inputs");
    for (const auto* p : parts) require_rank(*p, 4, "concat_channels input");
    Shape os = parts[0]->shape();
    std::size_t total_c = 0;
    for (const auto* p : parts) {
        for (int a = 1; a < 4; ++a)
            if (p->shape()[a] != os[a])
                throw DimensionError("concat_channels: spatial mismatch " +
                                     shape_to_string(p->shape()) + " vs " + shape_to_string(os));
        total_c += p->shape()[0];
    }
    os[0] = total_c;
    Tensor<T> out(os);
    std::size_t off = 0;
    for (const auto* p : parts) {
        std::copy(p->data(), p->data() + p->size(), out.data() + off);
        off += p->size();
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b))
        throw DimensionError("add: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

// Fused stable softmax + cross-entropy over logits of shape (B, K).
// Returns the mean loss and d(loss)/d(logits).
template <typename T>
struct XentResult {
    double loss;
    Tensor<T> grad;
};

template <typename T>
XentResult<T> softmax_crossentropy(const Tensor<T>& logits, std::span<const int> labels) {
    require_rank(logits, 2, "softmax_crossentropy logits");
    const std::size_t B = logits.shape()[0];
    const std::size_t K = logits.shape()[1];
    if (labels.size() != B)
        throw DimensionError("softmax_crossentropy: " + std::to_string(labels.size()) +
                             " labels for batch " + std::to_string(B));
    Tensor<T> grad(logits.shape());
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= K)
            throw IndexError("label " + std::to_string(y) + " out of range for K=" +
                             std::to_string(K));
        const T* row = logits.data() + b * K;
        double m = row[0];
        for (std::size_t k = 1; k < K; ++k) m = std::max(m, static_cast<double>(row[k]));
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(row[k]) - m);
        const double logz = std::log(z) + m;
        loss += logz - static_cast<double>(row[y]);
        for (std::size_t k = 0; k < K; ++k) {
            const double p = std::exp(static_cast<double>(row[k]) - logz);
            grad.at2(b, k) = static_cast<T>((p - (static_cast<std::size_t>(y) == k ? 1.0 : 0.0)) /
                                            static_cast<double>(B));
        }
    }
    return {loss / static_cast<double>(B), std::move(grad)};
}

}  // namespace relpv
