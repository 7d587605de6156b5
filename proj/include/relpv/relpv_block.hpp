#pragma once

// The ReLPV block: a four-stage drop-in for a dense 3-D convolution.
//
//   layer 1   1x1x1 convolution collapsing c input channels to 1
//   layer 2   fixed 3-D STFT over 13 low frequency points -> 26 real channels
//   layer 3   ReLU
//   layer 4   learned 1x1x1 convolution mixing 26 -> f output channels
//
// Only layers 1 and 4 carry trainable weights; the 26 x n^3 basis is a fixed
// function of the window size. Layer 2 is evaluated either directly from the
// packed matrix (gather of the n^3 neighborhood, used as the reference and by
// the verification suite) or separably as three cascaded complex 1-D passes.
// The separable route shares the depth/height prefixes common to several
// frequency points and walks each fiber with an O(1)-per-position rolling
// update (the per-axis kernels are geometric sequences, so the window sum
// obeys S(x+1) = z*S(x) - z^{r+1} f(x-r) + z^{-r} f(x+r+1)).
//
// "Same" padding replicates the edge sample rather than padding zeros; this
// keeps every output channel exactly zero on constant inputs (each basis row
// sums to zero) all the way to the boundary, and it factorizes per axis so the
// separable and direct paths stay equivalent. Striding evaluates the same
// windows on the subsampled output grid in all three axes.
//
// Layer-2 accumulation runs in double regardless of the tensor scalar type.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/stft_basis.hpp"
#include "relpv/tensor.hpp"
#include "relpv/tensor_ops.hpp"

namespace relpv {

struct Layer2Options {
    std::size_t stride = 1;
    Padding padding = Padding::SameReplicate;
};

namespace detail {

struct Extents3 {
    std::size_t d, h, w;
    std::size_t volume() const { return d * h * w; }
};

inline Extents3 layer2_out_extents(const Extents3& in, int n, const Layer2Options& opt) {
    if (opt.stride == 0) throw ParameterError("stride must be >= 1");
    auto one = [&](std::size_t L) {
        if (opt.padding == Padding::Valid) {
            if (L < static_cast<std::size_t>(n))
                throw DimensionError("valid STFT window exceeds extent " + std::to_string(L));
            return (L - static_cast<std::size_t>(n)) / opt.stride + 1;
        }
        return (L + opt.stride - 1) / opt.stride;
    };
    return {one(in.d), one(in.h), one(in.w)};
}

// One complex 1-D pass along `axis` of a complex field stored as separate
// re/im planes (im may be null => purely real input). The kernel is the
// geometric sequence g(t) = z^t, t = -r..r, z = exp(-j 2 pi s / n), applied in
// gather orientation: out(x) = sum_t g(t) in(x - t). Padding materializes the
// (clamped / zeroed) fiber into a scratch buffer; output positions are the
// stride-subsampled window centers.
class ComplexAxisPass {
public:
    ComplexAxisPass(int sign, int n, std::size_t stride, Padding padding)
        : n_(n), r_((n - 1) / 2), stride_(stride), padding_(padding) {
        const double two_pi = 6.283185307179586476925286766559;
        z_ = std::polar(1.0, -two_pi * static_cast<double>(sign) / static_cast<double>(n));
        taps_.resize(static_cast<std::size_t>(n));
        for (int t = -r_; t <= r_; ++t)
            taps_[static_cast<std::size_t>(t + r_)] =
                std::polar(1.0, -two_pi * static_cast<double>(sign) * t / static_cast<double>(n));
        z_out_ = std::pow(z_, r_ + 1);   // multiplies the sample leaving the window
        z_in_ = std::pow(z_, -r_);       // multiplies the sample entering the window
    }

    void run(const double* in_re, const double* in_im, Extents3 idim, int axis,
             std::vector<double>& out_re, std::vector<double>& out_im, Extents3& odim) const {
        const std::array<std::size_t, 3> ext = {idim.d, idim.h, idim.w};
        const std::array<std::size_t, 3> str = {idim.h * idim.w, idim.w, 1};
        const std::size_t L = ext[static_cast<std::size_t>(axis)];
        const std::size_t pad = padding_ == Padding::Valid ? 0 : static_cast<std::size_t>(r_);
        const std::size_t Lb = L + 2 * pad;
        if (padding_ == Padding::Valid && L < static_cast<std::size_t>(n_))
            throw DimensionError("valid STFT window exceeds extent " + std::to_string(L));
        const std::size_t outL = padding_ == Padding::Valid
                                     ? (L - static_cast<std::size_t>(n_)) / stride_ + 1
                                     : (L + stride_ - 1) / stride_;
        odim = idim;
        (axis == 0 ? odim.d : axis == 1 ? odim.h : odim.w) = outL;
        out_re.assign(odim.volume(), 0.0);
        out_im.assign(odim.volume(), 0.0);
        const std::array<std::size_t, 3> oext = {odim.d, odim.h, odim.w};
        const std::array<std::size_t, 3> ostr = {odim.h * odim.w, odim.w, 1};

        // buffers holding one padded fiber
        std::vector<double>& br = scratch_re();
        std::vector<double>& bi = scratch_im();
        br.resize(Lb);
        bi.resize(Lb);

        const int a1 = axis == 0 ? 1 : 0;          // the two orthogonal axes
        const int a2 = axis == 2 ? 1 : 2;
        for (std::size_t i1 = 0; i1 < ext[static_cast<std::size_t>(a1)]; ++i1)
            for (std::size_t i2 = 0; i2 < ext[static_cast<std::size_t>(a2)]; ++i2) {
                const std::size_t ibase = i1 * str[static_cast<std::size_t>(a1)] +
                                          i2 * str[static_cast<std::size_t>(a2)];
                const std::size_t obase = i1 * ostr[static_cast<std::size_t>(a1)] +
                                          i2 * ostr[static_cast<std::size_t>(a2)];
                const std::size_t istep = str[static_cast<std::size_t>(axis)];
                // materialize padded fiber
                for (std::size_t u = 0; u < Lb; ++u) {
                    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(u) -
                                             static_cast<std::ptrdiff_t>(pad);
                    if (p >= 0 && p < static_cast<std::ptrdiff_t>(L)) {
                        const std::size_t idx = ibase + static_cast<std::size_t>(p) * istep;
                        br[u] = in_re[idx];
                        bi[u] = in_im ? in_im[idx] : 0.0;
                    } else if (padding_ == Padding::SameReplicate) {
                        const std::size_t q = p < 0 ? 0 : L - 1;
                        const std::size_t idx = ibase + q * istep;
                        br[u] = in_re[idx];
                        bi[u] = in_im ? in_im[idx] : 0.0;
                    } else {
                        br[u] = 0.0;
                        bi[u] = 0.0;
                    }
                }
                run_fiber(br.data(), bi.data(), Lb, outL, out_re.data() + obase,
                          out_im.data() + obase, ostr[static_cast<std::size_t>(axis)]);
            }
    }

private:
    // window sum over buffer: R(ws) = sum_t g(t) b[ws + r - t]; writes every
    // stride-th window. Rolls when the fiber is long enough to amortize.
    void run_fiber(const double* br, const double* bi, std::size_t Lb, std::size_t outL,
                   double* or_, double* oi_, std::size_t ostep) const {
        const std::size_t n = static_cast<std::size_t>(n_);
        auto taps_at = [&](std::size_t ws, double& re, double& im) {
            double ar = 0.0, ai = 0.0;
            for (int t = -r_; t <= r_; ++t) {
                const std::complex<double>& g = taps_[static_cast<std::size_t>(t + r_)];
                const std::size_t u = ws + static_cast<std::size_t>(r_ - t);
                ar += g.real() * br[u] - g.imag() * bi[u];
                ai += g.imag() * br[u] + g.real() * bi[u];
            }
            re = ar;
            im = ai;
        };
        const std::size_t last_ws = (outL - 1) * stride_;
        if (last_ws < 4 * n || Lb < n + 4) {
            // short fiber: plain taps at each emitted window
            for (std::size_t o = 0; o < outL; ++o) {
                double re, im;
                taps_at(o * stride_, re, im);
                or_[o * ostep] = re;
                oi_[o * ostep] = im;
            }
            return;
        }
        double sr, si;
        taps_at(0, sr, si);
        or_[0] = sr;
        oi_[0] = si;
        std::size_t next_o = 1;
        for (std::size_t ws = 1; ws <= last_ws; ++ws) {
            // S <- z*S - z^{r+1} b[ws-1] + z^{-r} b[ws-1+n]
            const double pr = z_.real() * sr - z_.imag() * si;
            const double pi = z_.imag() * sr + z_.real() * si;
            const double lr = br[ws - 1], li = bi[ws - 1];
            const double er = br[ws - 1 + n], ei = bi[ws - 1 + n];
            sr = pr - (z_out_.real() * lr - z_out_.imag() * li) +
                 (z_in_.real() * er - z_in_.imag() * ei);
            si = pi - (z_out_.imag() * lr + z_out_.real() * li) +
                 (z_in_.imag() * er + z_in_.real() * ei);
            if (ws == next_o * stride_) {
                or_[next_o * ostep] = sr;
                oi_[next_o * ostep] = si;
                ++next_o;
            }
        }
    }

    static std::vector<double>& scratch_re() {
        thread_local std::vector<double> v;
        return v;
    }
    static std::vector<double>& scratch_im() {
        thread_local std::vector<double> v;
        return v;
    }

    int n_, r_;
    std::size_t stride_;
    Padding padding_;
    std::complex<double> z_, z_out_, z_in_;
    std::vector<std::complex<double>> taps_;
};

}  // namespace detail

// Reference evaluation: per output position, gather the n^3 neighborhood
// (clamped or zero-extended per the padding mode) and apply the packed W.
template <typename T>
Tensor<T> layer2_stft_direct(const Tensor<T>& fmap, const StftBasis& basis,
                             Layer2Options opt = {}) {
    require_rank(fmap, 4, "layer2 input");
    if (fmap.shape()[0] != 1)
        throw DimensionError("layer2 expects a single input channel, got " +
                             shape_to_string(fmap.shape()));
    const detail::Extents3 in{fmap.shape()[1], fmap.shape()[2], fmap.shape()[3]};
    const detail::Extents3 out = detail::layer2_out_extents(in, basis.n, opt);
    Tensor<T> res({26, out.d, out.h, out.w});
    const int r = basis.r;
    const std::size_t off = opt.padding == Padding::Valid ? static_cast<std::size_t>(r) : 0;
    std::vector<double> window(static_cast<std::size_t>(basis.n) * basis.n * basis.n);
    for (std::size_t od = 0; od < out.d; ++od)
        for (std::size_t oh = 0; oh < out.h; ++oh)
            for (std::size_t ow = 0; ow < out.w; ++ow) {
                const std::ptrdiff_t xd = static_cast<std::ptrdiff_t>(od * opt.stride + off);
                const std::ptrdiff_t xh = static_cast<std::ptrdiff_t>(oh * opt.stride + off);
                const std::ptrdiff_t xw = static_cast<std::ptrdiff_t>(ow * opt.stride + off);
                std::size_t col = 0;
                for (int yd = -r; yd <= r; ++yd)
                    for (int yh = -r; yh <= r; ++yh)
                        for (int yw = -r; yw <= r; ++yw, ++col) {
                            // value f(x - y), offsets gathered in reflected order
                            std::ptrdiff_t pd = xd - yd, ph = xh - yh, pw = xw - yw;
                            double v;
                            const bool inside = pd >= 0 && ph >= 0 && pw >= 0 &&
                                                pd < static_cast<std::ptrdiff_t>(in.d) &&
                                                ph < static_cast<std::ptrdiff_t>(in.h) &&
                                                pw < static_cast<std::ptrdiff_t>(in.w);
                            if (inside) {
                                v = static_cast<double>(fmap.at4(0, static_cast<std::size_t>(pd),
                                                                 static_cast<std::size_t>(ph),
                                                                 static_cast<std::size_t>(pw)));
                            } else if (opt.padding == Padding::SameReplicate) {
                                pd = std::clamp<std::ptrdiff_t>(pd, 0, static_cast<std::ptrdiff_t>(in.d) - 1);
                                ph = std::clamp<std::ptrdiff_t>(ph, 0, static_cast<std::ptrdiff_t>(in.h) - 1);
                                pw = std::clamp<std::ptrdiff_t>(pw, 0, static_cast<std::ptrdiff_t>(in.w) - 1);
                                v = static_cast<double>(fmap.at4(0, static_cast<std::size_t>(pd),
                                                                 static_cast<std::size_t>(ph),
                                                                 static_cast<std::size_t>(pw)));
                            } else {
                                v = 0.0;
                            }
                            window[col] = v;
                        }
                for (std::size_t row = 0; row < 26; ++row) {
                    const double* wrow = basis.W.data() + row * window.size();
                    double acc = 0.0;
                    for (std::size_t cidx = 0; cidx < window.size(); ++cidx)
                        acc += wrow[cidx] * window[cidx];
                    res.at4(row, od, oh, ow) = static_cast<T>(acc);
                }
            }
    return res;
}

// Separable evaluation: three cascaded complex 1-D passes (depth, height,
// width). Depth and height passes common to several frequency points are
// computed once and shared.
template <typename T>
Tensor<T> layer2_stft_separable(const Tensor<T>& fmap, const StftBasis& basis,
                                Layer2Options opt = {}) {
    require_rank(fmap, 4, "layer2 input");
    if (fmap.shape()[0] != 1)
        throw DimensionError("layer2 expects a single input channel, got " +
                             shape_to_string(fmap.shape()));
    const detail::Extents3 in{fmap.shape()[1], fmap.shape()[2], fmap.shape()[3]};
    const detail::Extents3 out = detail::layer2_out_extents(in, basis.n, opt);
    const auto& pts = frequency_points();

    // promote input plane to double
    std::vector<double> plane(in.volume());
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = static_cast<double>(fmap[i]);

    struct Stage {
        int key;  // sign driving this pass
        std::vector<double> re, im;
        detail::Extents3 dim;
    };

    // depth stage, grouped by the depth sign
    std::vector<Stage> dstage;
    std::array<int, 13> dgroup{};
    for (std::size_t i = 0; i < 13; ++i) {
        const int s = pts[i].signs[0];
        int g = -1;
        for (std::size_t j = 0; j < dstage.size(); ++j)
            if (dstage[j].key == s) g = static_cast<int>(j);
        if (g < 0) {
            g = static_cast<int>(dstage.size());
            dstage.push_back({s, {}, {}, {}});
            detail::ComplexAxisPass pass(s, basis.n, opt.stride, opt.padding);
            pass.run(plane.data(), nullptr, in, 0, dstage[static_cast<std::size_t>(g)].re,
                     dstage[static_cast<std::size_t>(g)].im, dstage[static_cast<std::size_t>(g)].dim);
        }
        dgroup[i] = g;
    }

    // height stage, grouped by (depth sign, height sign)
    struct HKey {
        int sd, sh;
    };
    std::vector<Stage> hstage;
    std::vector<HKey> hkeys;
    std::array<int, 13> hgroup{};
    for (std::size_t i = 0; i < 13; ++i) {
        const int sd = pts[i].signs[0], sh = pts[i].signs[1];
        int g = -1;
        for (std::size_t j = 0; j < hkeys.size(); ++j)
            if (hkeys[j].sd == sd && hkeys[j].sh == sh) g = static_cast<int>(j);
        if (g < 0) {
            g = static_cast<int>(hstage.size());
            hkeys.push_back({sd, sh});
            hstage.push_back({sh, {}, {}, {}});
            const Stage& src = dstage[static_cast<std::size_t>(dgroup[i])];
            detail::ComplexAxisPass pass(sh, basis.n, opt.stride, opt.padding);
            pass.run(src.re.data(), src.im.data(), src.dim, 1,
                     hstage[static_cast<std::size_t>(g)].re, hstage[static_cast<std::size_t>(g)].im,
                     hstage[static_cast<std::size_t>(g)].dim);
        }
        hgroup[i] = g;
    }

    Tensor<T> res({26, out.d, out.h, out.w});
    const std::size_t ovol = out.volume();
    std::vector<double> wre, wim;
    for (std::size_t i = 0; i < 13; ++i) {
        const Stage& src = hstage[static_cast<std::size_t>(hgroup[i])];
        detail::ComplexAxisPass pass(pts[i].signs[2], basis.n, opt.stride, opt.padding);
        detail::Extents3 fdim{};
        pass.run(src.re.data(), src.im.data(), src.dim, 2, wre, wim, fdim);
        if (fdim.d != out.d || fdim.h != out.h || fdim.w != out.w)
            throw DimensionError("separable pass produced unexpected extents");
        T* pr = res.data() + (2 * i) * ovol;
        T* pi = res.data() + (2 * i + 1) * ovol;
        for (std::size_t p = 0; p < ovol; ++p) {
            pr[p] = static_cast<T>(wre[p]);
            pi[p] = static_cast<T>(wim[p]);
        }
    }
    return res;
}

// Adjoint of the layer-2 linear map: scatters 26-channel cotangents back to
// the single input plane (transposed gather, honoring padding and stride).
template <typename T>
Tensor<T> layer2_stft_adjoint(const Tensor<T>& grad26, const StftBasis& basis,
                              const Layer2Options& opt, const Shape& in_shape) {
    require_rank(grad26, 4, "layer2 adjoint cotangent");
    if (in_shape.size() != 4 || in_shape[0] != 1)
        throw DimensionError("layer2 adjoint target must be (1,d,h,w)");
    const detail::Extents3 in{in_shape[1], in_shape[2], in_shape[3]};
    const detail::Extents3 out = detail::layer2_out_extents(in, basis.n, opt);
    if (grad26.shape()[0] != 26 || grad26.shape()[1] != out.d || grad26.shape()[2] != out.h ||
        grad26.shape()[3] != out.w)
        throw DimensionError("layer2 adjoint cotangent shape " + shape_to_string(grad26.shape()) +
                             " does not match forward output");
    Tensor<double> acc({1, in.d, in.h, in.w});
    const int r = basis.r;
    const std::size_t off = opt.padding == Padding::Valid ? static_cast<std::size_t>(r) : 0;
    const std::size_t n3 = static_cast<std::size_t>(basis.n) * basis.n * basis.n;
    std::vector<double> g(26);
    for (std::size_t od = 0; od < out.d; ++od)
        for (std::size_t oh = 0; oh < out.h; ++oh)
            for (std::size_t ow = 0; ow < out.w; ++ow) {
                for (std::size_t row = 0; row < 26; ++row)
                    g[row] = static_cast<double>(grad26.at4(row, od, oh, ow));
                const std::ptrdiff_t xd = static_cast<std::ptrdiff_t>(od * opt.stride + off);
                const std::ptrdiff_t xh = static_cast<std::ptrdiff_t>(oh * opt.stride + off);
                const std::ptrdiff_t xw = static_cast<std::ptrdiff_t>(ow * opt.stride + off);
                std::size_t col = 0;
                for (int yd = -r; yd <= r; ++yd)
                    for (int yh = -r; yh <= r; ++yh)
                        for (int yw = -r; yw <= r; ++yw, ++col) {
                            std::ptrdiff_t pd = xd - yd, ph = xh - yh, pw = xw - yw;
                            const bool inside = pd >= 0 && ph >= 0 && pw >= 0 &&
                                                pd < static_cast<std::ptrdiff_t>(in.d) &&
                                                ph < static_cast<std::ptrdiff_t>(in.h) &&
                                                pw < static_cast<std::ptrdiff_t>(in.w);
                            if (!inside) {
                                if (opt.padding != Padding::SameReplicate) continue;
                                pd = std::clamp<std::ptrdiff_t>(pd, 0, static_cast<std::ptrdiff_t>(in.d) - 1);
                                ph = std::clamp<std::ptrdiff_t>(ph, 0, static_cast<std::ptrdiff_t>(in.h) - 1);
                                pw = std::clamp<std::ptrdiff_t>(pw, 0, static_cast<std::ptrdiff_t>(in.w) - 1);
                            }
                            double s = 0.0;
                            for (std::size_t row = 0; row < 26; ++row)
                                s += basis.W.data()[row * n3 + col] * g[row];
                            acc.at4(0, static_cast<std::size_t>(pd), static_cast<std::size_t>(ph),
                                    static_cast<std::size_t>(pw)) += s;
                        }
            }
    Tensor<T> res({1, in.d, in.h, in.w});
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = static_cast<T>(acc[i]);
    return res;
}

// --- full block ---

template <typename T>
struct RelpvParams {
    int n = 3;
    std::size_t f = 1;
    std::size_t stride = 1;
    Padding padding = Padding::SameReplicate;
    bool bias = true;
    Tensor<T> w1;  // (1, c)
    Tensor<T> b1;  // (1)       unused when !bias
    Tensor<T> w4;  // (f, 26)
    Tensor<T> b4;  // (f)       unused when !bias
    std::shared_ptr<const StftBasis> basis;
};

inline std::size_t relpv_param_count(std::size_t c, std::size_t f, bool bias) {
    return bias ? c + 1 + 26 * f + f : c + 26 * f;
}

template <typename T>
RelpvParams<T> make_relpv_params(std::size_t c, std::size_t f, int n, std::size_t stride = 1,
                                 Padding padding = Padding::SameReplicate, bool bias = true,
                                 std::shared_ptr<const StftBasis> basis = nullptr) {
    RelpvParams<T> p;
    p.n = n;
    p.f = f;
    p.stride = stride;
    p.padding = padding;
    p.bias = bias;
    p.w1 = Tensor<T>({1, c});
    p.b1 = Tensor<T>({1});
    p.w4 = Tensor<T>({f, 26});
    p.b4 = Tensor<T>({f});
    p.basis = basis ? std::move(basis) : shared_basis(n);
    return p;
}

template <typename T>
struct RelpvCache {
    Tensor<T> l1;        // layer-1 output (1,d,h,w)
    Tensor<T> stft;      // layer-2 output, pre-ReLU (26,d',h',w')
    Tensor<T> relu_out;  // layer-3 output (26,d',h',w')
    Shape in_shape;
};

template <typename T>
Tensor<T> relpv_forward(const Tensor<T>& input, const RelpvParams<T>& p,
                        RelpvCache<T>* cache = nullptr) {
    require_rank(input, 4, "relpv input");
    if (input.shape()[0] != p.w1.shape()[1])
        throw DimensionError("relpv: input channels " + std::to_string(input.shape()[0]) +
                             " vs layer-1 weights " + shape_to_string(p.w1.shape()));
    if (!p.basis || p.basis->n != p.n) throw ParameterError("relpv: basis/window mismatch");
    Tensor<T> l1 = pointwise_conv(input, p.w1, p.bias ? &p.b1 : nullptr);
    Tensor<T> stft = layer2_stft_separable(l1, *p.basis, Layer2Options{p.stride, p.padding});
    Tensor<T> act = relu(stft);
    Tensor<T> out = pointwise_conv(act, p.w4, p.bias ? &p.b4 : nullptr);
    if (cache) {
        cache->l1 = std::move(l1);
        cache->stft = std::move(stft);
        cache->relu_out = std::move(act);
        cache->in_shape = input.shape();
    }
    return out;
}

template <typename T>
struct RelpvGrads {
    Tensor<T> input;
    Tensor<T> w1, b1, w4, b4;
};

template <typename T>
RelpvGrads<T> relpv_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const RelpvParams<T>& p, const RelpvCache<T>& cache) {
    require_rank(grad_out, 4, "relpv grad_out");
    const std::size_t f = p.w4.shape()[0];
    const std::size_t c = p.w1.shape()[1];
    const std::size_t ovol = grad_out.shape()[1] * grad_out.shape()[2] * grad_out.shape()[3];
    if (grad_out.shape()[0] != f || cache.relu_out.size() != 26 * ovol)
        throw DimensionError("relpv backward: cotangent shape " + shape_to_string(grad_out.shape()) +
                             " inconsistent with cache");

    RelpvGrads<T> g;
    // layer 4 (1x1x1, 26 -> f)
    g.w4 = Tensor<T>({f, 26});
    g.b4 = Tensor<T>({f});
    for (std::size_t k = 0; k < f; ++k) {
        const T* go = grad_out.data() + k * ovol;
        for (std::size_t j = 0; j < 26; ++j) {
            const T* a = cache.relu_out.data() + j * ovol;
            T acc = T(0);
            for (std::size_t pidx = 0; pidx < ovol; ++pidx) acc += go[pidx] * a[pidx];
            g.w4.at2(k, j) = acc;
        }
        T bs = T(0);
        for (std::size_t pidx = 0; pidx < ovol; ++pidx) bs += go[pidx];
        g.b4[k] = p.bias ? bs : T(0);
    }
    // back through layer 4 into the 26 activation channels
    Tensor<T> g_act({26, grad_out.shape()[1], grad_out.shape()[2], grad_out.shape()[3]}, T(0));
    for (std::size_t j = 0; j < 26; ++j) {
        T* dst = g_act.data() + j * ovol;
        for (std::size_t k = 0; k < f; ++k) {
            const T w = p.w4.at2(k, j);
            const T* go = grad_out.data() + k * ovol;
            for (std::size_t pidx = 0; pidx < ovol; ++pidx) dst[pidx] += w * go[pidx];
        }
    }
    // layer 3: ReLU mask from the cached pre-activation
    for (std::size_t i = 0; i < g_act.size(); ++i)
        if (cache.stft[i] <= T(0)) g_act[i] = T(0);
    // layer 2: fixed linear map, adjoint scatter (no weight gradient by design)
    Tensor<T> g_l1 =
        layer2_stft_adjoint(g_act, *p.basis, Layer2Options{p.stride, p.padding}, cache.l1.shape());
    // layer 1 (1x1x1, c -> 1)
    g.w1 = Tensor<T>({1, c});
    g.b1 = Tensor<T>({1});
    const std::size_t ivol = input.shape()[1] * input.shape()[2] * input.shape()[3];
    for (std::size_t j = 0; j < c; ++j) {
        const T* x = input.data() + j * ivol;
        T acc = T(0);
        for (std::size_t pidx = 0; pidx < ivol; ++pidx) acc += g_l1[pidx] * x[pidx];
        g.w1.at2(0, j) = acc;
    }
    {
        T bs = T(0);
        for (std::size_t pidx = 0; pidx < ivol; ++pidx) bs += g_l1[pidx];
        g.b1[0] = p.bias ? bs : T(0);
    }
    g.input = Tensor<T>(input.shape());
    for (std::size_t j = 0; j < c; ++j) {
        const T w = p.w1.at2(0, j);
        T* dst = g.input.data() + j * ivol;
        for (std::size_t pidx = 0; pidx < ivol; ++pidx) dst[pidx] = w * g_l1[pidx];
    }
    return g;
}

}  // namespace relpv
