#pragma once

// Reference dense 3-D convolution (cross-correlation orientation), the
// baseline the ReLPV block is measured against. Supports cubic kernels,
// same-zero or valid padding, and a common stride on all three spatial axes.
// A 1x1x1 stride-1 kernel routes through pointwise_conv so the two coincide
// bitwise.

#include <cstddef>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/tensor.hpp"
#include "relpv/tensor_ops.hpp"

namespace relpv {

template <typename T>
struct Conv3dParams {
    int n = 3;                           // kernel extent per axis
    std::size_t stride = 1;
    Padding padding = Padding::SameZero;  // SameZero or Valid
    bool bias = true;
    Tensor<T> weights;  // (c_out, c_in, n, n, n)
    Tensor<T> b;        // (c_out)
};

template <typename T>
Conv3dParams<T> make_conv3d_params(std::size_t c_in, std::size_t c_out, int n,
                                   std::size_t stride = 1, Padding padding = Padding::SameZero,
                                   bool bias = true) {
    if (n < 1) throw ParameterError("conv3d kernel extent must be >= 1");
    Conv3dParams<T> p;
    p.n = n;
    p.stride = stride;
    p.padding = padding;
    p.bias = bias;
    p.weights = Tensor<T>({c_out, c_in, static_cast<std::size_t>(n), static_cast<std::size_t>(n),
                           static_cast<std::size_t>(n)});
    p.b = Tensor<T>({c_out});
    return p;
}

inline std::size_t conv3d_param_count(std::size_t c_in, std::size_t c_out, int n, bool bias) {
    const std::size_t k = static_cast<std::size_t>(n);
    return c_in * k * k * k * c_out + (bias ? c_out : 0);
}

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& input, const Conv3dParams<T>& p) {
    require_rank(input, 4, "conv3d input");
    if (p.padding == Padding::SameReplicate)
        throw ParameterError("conv3d supports same-zero or valid padding");
    const std::size_t ci = p.weights.shape()[1];
    const std::size_t co = p.weights.shape()[0];
    if (input.shape()[0] != ci)
        throw DimensionError("conv3d: input channels " + std::to_string(input.shape()[0]) +
                             " vs weights " + shape_to_string(p.weights.shape()));
    const std::size_t n = static_cast<std::size_t>(p.n);
    if (p.n == 1 && p.stride == 1) {
        Tensor<T> w2 = p.weights.reshaped({co, ci});
        return pointwise_conv(input, w2, p.bias ? &p.b : nullptr);
    }
    const std::size_t D = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
    const std::size_t OD = conv_out_extent(D, n, p.stride, p.padding);
    const std::size_t OH = conv_out_extent(H, n, p.stride, p.padding);
    const std::size_t OW = conv_out_extent(W, n, p.stride, p.padding);
    const std::ptrdiff_t pad = p.padding == Padding::Valid ? 0 : static_cast<std::ptrdiff_t>(n / 2);
    Tensor<T> out({co, OD, OH, OW});
    const std::size_t ivol = D * H * W;
    const std::size_t kvol = n * n * n;
    for (std::size_t k = 0; k < co; ++k) {
        const T bias = p.bias ? p.b[k] : T(0);
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    const std::ptrdiff_t d0 = static_cast<std::ptrdiff_t>(od * p.stride) - pad;
                    const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(oh * p.stride) - pad;
                    const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(ow * p.stride) - pad;
                    T acc = T(0);
                    for (std::size_t j = 0; j < ci; ++j) {
                        const T* src = input.data() + j * ivol;
                        const T* ker = p.weights.data() + (k * ci + j) * kvol;
                        for (std::size_t kd = 0; kd < n; ++kd) {
                            const std::ptrdiff_t d = d0 + static_cast<std::ptrdiff_t>(kd);
                            if (d < 0 || d >= static_cast<std::ptrdiff_t>(D)) continue;
                            for (std::size_t kh = 0; kh < n; ++kh) {
                                const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(kh);
                                if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                                const T* row = src + (static_cast<std::size_t>(d) * H +
                                                      static_cast<std::size_t>(h)) * W;
                                const T* krow = ker + (kd * n + kh) * n;
                                const std::ptrdiff_t lo = w0 < 0 ? -w0 : 0;
                                const std::ptrdiff_t hi =
                                    std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n),
                                                             static_cast<std::ptrdiff_t>(W) - w0);
                                T lane = T(0);
                                for (std::ptrdiff_t kw = lo; kw < hi; ++kw)
                                    lane += krow[kw] * row[w0 + kw];
                                acc += lane;
                            }
                        }
                    }
                    out.at4(k, od, oh, ow) = acc + bias;
                }
    }
    return out;
}

template <typename T>
struct Conv3dGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> b;
};

template <typename T>
Conv3dGrads<T> conv3d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                               const Conv3dParams<T>& p) {
    require_rank(grad_out, 4, "conv3d grad_out");
    const std::size_t ci = p.weights.shape()[1];
    const std::size_t co = p.weights.shape()[0];
    const std::size_t n = static_cast<std::size_t>(p.n);
    const std::size_t D = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
    const std::size_t OD = grad_out.shape()[1], OH = grad_out.shape()[2], OW = grad_out.shape()[3];
    const std::ptrdiff_t pad = p.padding == Padding::Valid ? 0 : static_cast<std::ptrdiff_t>(n / 2);
    Conv3dGrads<T> g;
    g.input = Tensor<T>(input.shape(), T(0));
    g.weights = Tensor<T>(p.weights.shape(), T(0));
    g.b = Tensor<T>({co}, T(0));
    const std::size_t ivol = D * H * W;
    const std::size_t ovol = OD * OH * OW;
    const std::size_t kvol = n * n * n;

    for (std::size_t k = 0; k < co; ++k) {
        const T* go = grad_out.data() + k * ovol;
        if (p.bias) {
            T bs = T(0);
            for (std::size_t i = 0; i < ovol; ++i) bs += go[i];
            g.b[k] = bs;
        }
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    const T gv = go[(od * OH + oh) * OW + ow];
                    if (gv == T(0)) continue;
                    const std::ptrdiff_t d0 = static_cast<std::ptrdiff_t>(od * p.stride) - pad;
                    const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(oh * p.stride) - pad;
                    const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(ow * p.stride) - pad;
                    for (std::size_t j = 0; j < ci; ++j) {
                        const T* src = input.data() + j * ivol;
                        T* gsrc = g.input.data() + j * ivol;
                        const T* ker = p.weights.data() + (k * ci + j) * kvol;
                        T* gker = g.weights.data() + (k * ci + j) * kvol;
                        for (std::size_t kd = 0; kd < n; ++kd) {
                            const std::ptrdiff_t d = d0 + static_cast<std::ptrdiff_t>(kd);
                            if (d < 0 || d >= static_cast<std::ptrdiff_t>(D)) continue;
                            for (std::size_t kh = 0; kh < n; ++kh) {
                                const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(kh);
                                if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                                const std::size_t base = (static_cast<std::size_t>(d) * H +
                                                          static_cast<std::size_t>(h)) * W;
                                const std::size_t kbase = (kd * n + kh) * n;
                                const std::ptrdiff_t lo = w0 < 0 ? -w0 : 0;
                                const std::ptrdiff_t hi =
                                    std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n),
                                                             static_cast<std::ptrdiff_t>(W) - w0);
                                for (std::ptrdiff_t kw = lo; kw < hi; ++kw) {
                                    const std::size_t widx = static_cast<std::size_t>(w0 + kw);
                                    gker[kbase + static_cast<std::size_t>(kw)] += gv * src[base + widx];
                                    gsrc[base + widx] += gv * ker[kbase + static_cast<std::size_t>(kw)];
                                }
                            }
                        }
                    }
                }
    }
    if (!p.bias) g.b.fill(T(0));
    return g;
}

}  // namespace relpv
