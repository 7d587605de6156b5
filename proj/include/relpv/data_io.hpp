#pragma once

// Synthetic data generation, label-preserving augmentation, binary-occupancy
// remapping, dataset splits, and the on-disk dataset layout:
//
//   <root>/manifest.txt
//   <root>/<split>/<class_id>/<index>.rten
//
// Two generators:
//   gen_voxel_shapes   static geometric primitives on a binary occupancy grid
//   gen_synthetic_clips  moving/pulsing Gaussian blobs whose class is a
//                        function of the tensor itself (recoverable from
//                        per-frame mass and centroid statistics)
//
// Everything is a pure function of (parameters, seed).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/rng.hpp"
#include "relpv/rten.hpp"
#include "relpv/tensor.hpp"

namespace relpv {

template <typename T>
struct LabeledDataset {
    std::vector<Tensor<T>> samples;
    std::vector<int> labels;
    int classes = 0;
    Shape sample_shape;
    std::uint64_t seed = 0;
    std::string generator;

    std::size_t size() const { return samples.size(); }
};

// ---- binary occupancy primitives ----------------------------------------

namespace detail {

// class ids follow this order; K <= 10 takes a prefix
inline const std::vector<std::string>& shape_class_names() {
    static const std::vector<std::string> names = {
        "sphere", "cube",  "cylinder", "cone",      "torus",
        "shell",  "frame", "cross",    "ellipsoid", "pyramid"};
    return names;
}

template <typename T>
Tensor<T> render_shape(int cls, std::size_t g, Rng& rng) {
    Tensor<T> t({1, g, g, g}, T(0));
    const double gd = static_cast<double>(g);
    const double cx = gd / 2.0 + rng.uniform(-gd / 8.0, gd / 8.0);
    const double cy = gd / 2.0 + rng.uniform(-gd / 8.0, gd / 8.0);
    const double cz = gd / 2.0 + rng.uniform(-gd / 8.0, gd / 8.0);
    const double R = rng.uniform(gd / 5.0, gd / 3.2);
    const double thick = std::max(1.2, R / 3.0);
    const double a = rng.uniform(0.55, 1.0) * R;
    const double b = rng.uniform(0.55, 1.0) * R;
    auto inside = [&](double d, double h, double w) -> bool {
        const double zd = d - cz, yd = h - cy, xd = w - cx;
        switch (cls) {
            case 0:  // sphere
                return zd * zd + yd * yd + xd * xd <= R * R;
            case 1:  // solid cube
                return std::abs(zd) <= R && std::abs(yd) <= R && std::abs(xd) <= R;
            case 2:  // cylinder along depth
                return yd * yd + xd * xd <= R * R && std::abs(zd) <= R;
            case 3: {  // cone narrowing along depth
                const double frac = (zd + R) / (2.0 * R);
                if (frac < 0.0 || frac > 1.0) return false;
                const double rr = R * (1.0 - frac);
                return yd * yd + xd * xd <= rr * rr;
            }
            case 4: {  // torus around the depth axis
                const double ring = std::sqrt(yd * yd + xd * xd) - R * 0.75;
                return ring * ring + zd * zd <= thick * thick;
            }
            case 5: {  // spherical shell
                const double rho = std::sqrt(zd * zd + yd * yd + xd * xd);
                return rho <= R && rho >= R - thick;
            }
            case 6: {  // cube frame
                const bool in_outer =
                    std::abs(zd) <= R && std::abs(yd) <= R && std::abs(xd) <= R;
                const bool in_inner = std::abs(zd) <= R - thick && std::abs(yd) <= R - thick &&
                                      std::abs(xd) <= R - thick;
                return in_outer && !in_inner;
            }
            case 7: {  // three orthogonal rods
                const double s = thick;
                return (std::abs(yd) <= s && std::abs(xd) <= s) ||
                       (std::abs(zd) <= s && std::abs(xd) <= s) ||
                       (std::abs(zd) <= s && std::abs(yd) <= s);
            }
            case 8: {  // axis-aligned ellipsoid
                const double q = (zd * zd) / (R * R) + (yd * yd) / (a * a) + (xd * xd) / (b * b);
                return q <= 1.0;
            }
            case 9: {  // square pyramid narrowing along depth
                const double frac = (zd + R) / (2.0 * R);
                if (frac < 0.0 || frac > 1.0) return false;
                const double rr = R * (1.0 - frac);
                return std::abs(yd) <= rr && std::abs(xd) <= rr;
            }
            default:
                throw ParameterError("unknown shape class " + std::to_string(cls));
        }
    };
    for (std::size_t d = 0; d < g; ++d)
        for (std::size_t h = 0; h < g; ++h)
            for (std::size_t w = 0; w < g; ++w)
                if (inside(static_cast<double>(d) + 0.5, static_cast<double>(h) + 0.5,
                           static_cast<double>(w) + 0.5))
                    t.at4(0, d, h, w) = T(1);
    return t;
}

}  // namespace detail

// K geometric classes, `per_class` binary occupancy grids each.
template <typename T>
LabeledDataset<T> gen_voxel_shapes(int K, int per_class, std::size_t grid, std::uint64_t seed) {
    if (K < 2 || K > 10) throw ParameterError("gen_voxel_shapes supports 2..10 classes");
    if (per_class < 1) throw ParameterError("per_class must be >= 1");
    if (grid < 8) throw ParameterError("grid must be >= 8");
    LabeledDataset<T> ds;
    ds.classes = K;
    ds.sample_shape = {1, grid, grid, grid};
    ds.seed = seed;
    ds.generator = "voxel_shapes";
    Rng root(seed);
    for (int c = 0; c < K; ++c)
        for (int i = 0; i < per_class; ++i) {
            Rng r = root.child(static_cast<std::uint64_t>(c) * 1000003ull +
                               static_cast<std::uint64_t>(i));
            ds.samples.push_back(detail::render_shape<T>(c, grid, r));
            ds.labels.push_back(c);
        }
    return ds;
}

// ---- occupancy remapping -------------------------------------------------

// {0,1} -> {-1, +5}: hollow space becomes a mild negative, occupied voxels a
// strong positive, so zero-mean filters see structure rather than bias.
template <typename T>
Tensor<T> remap_binary(const Tensor<T>& t) {
    Tensor<T> out = t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == T(0))
            out[i] = T(-1);
        else if (out[i] == T(1))
            out[i] = T(5);
        else
            throw ParameterError("remap_binary: tensor is not {0,1}-valued at index " +
                                 std::to_string(i));
    }
    return out;
}

template <typename T>
Tensor<T> inverse_remap(const Tensor<T>& t) {
    Tensor<T> out = t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == T(-1))
            out[i] = T(0);
        else if (out[i] == T(5))
            out[i] = T(1);
        else
            throw ParameterError("inverse_remap: tensor is not {-1,5}-valued at index " +
                                 std::to_string(i));
    }
    return out;
}

// ---- augmentation ---------------------------------------------------------

// Rotate the (h, w) plane by `quarter_turns` * 90 degrees (exact on the grid).
template <typename T>
Tensor<T> rotate_z(const Tensor<T>& t, int quarter_turns) {
    require_rank(t, 4, "rotate_z input");
    const std::size_t H = t.shape()[2], W = t.shape()[3];
    int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return t;
    if (q != 2 && H != W)
        throw DimensionError("90-degree rotation needs square (h,w), got " +
                             shape_to_string(t.shape()));
    Tensor<T> out(t.shape());
    for (std::size_t c = 0; c < t.shape()[0]; ++c)
        for (std::size_t d = 0; d < t.shape()[1]; ++d)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w) {
                    std::size_t nh = h, nw = w;
                    switch (q) {
                        case 1: nh = w; nw = H - 1 - h; break;
                        case 2: nh = H - 1 - h; nw = W - 1 - w; break;
                        case 3: nh = W - 1 - w; nw = h; break;
                    }
                    out.at4(c, d, nh, nw) = t.at4(c, d, h, w);
                }
    return out;
}

// Mirror along the width axis.
template <typename T>
Tensor<T> flip_h(const Tensor<T>& t) {
    require_rank(t, 4, "flip_h input");
    Tensor<T> out(t.shape());
    const std::size_t W = t.shape()[3];
    for (std::size_t c = 0; c < t.shape()[0]; ++c)
        for (std::size_t d = 0; d < t.shape()[1]; ++d)
            for (std::size_t h = 0; h < t.shape()[2]; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    out.at4(c, d, h, W - 1 - w) = t.at4(c, d, h, w);
    return out;
}

// Integer shift with zero fill.
template <typename T>
Tensor<T> translate(const Tensor<T>& t, int dd, int dh, int dw) {
    require_rank(t, 4, "translate input");
    Tensor<T> out(t.shape(), T(0));
    const std::ptrdiff_t D = static_cast<std::ptrdiff_t>(t.shape()[1]);
    const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(t.shape()[2]);
    const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(t.shape()[3]);
    for (std::size_t c = 0; c < t.shape()[0]; ++c)
        for (std::ptrdiff_t d = 0; d < D; ++d)
            for (std::ptrdiff_t h = 0; h < H; ++h)
                for (std::ptrdiff_t w = 0; w < W; ++w) {
                    const std::ptrdiff_t sd = d - dd, sh = h - dh, sw = w - dw;
                    if (sd < 0 || sh < 0 || sw < 0 || sd >= D || sh >= H || sw >= W) continue;
                    out.at4(c, static_cast<std::size_t>(d), static_cast<std::size_t>(h),
                            static_cast<std::size_t>(w)) =
                        t.at4(c, static_cast<std::size_t>(sd), static_cast<std::size_t>(sh),
                              static_cast<std::size_t>(sw));
                }
    return out;
}

// Flip each occupancy bit with probability p ({0,1} grids only).
template <typename T>
Tensor<T> occupancy_noise(const Tensor<T>& t, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw ParameterError("noise probability must be in [0,1]");
    Tensor<T> out = t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] != T(0) && out[i] != T(1))
            throw ParameterError("occupancy_noise: tensor is not {0,1}-valued");
        if (rng.uniform() < p) out[i] = out[i] == T(0) ? T(1) : T(0);
    }
    return out;
}

// ---- synthetic clips -------------------------------------------------------

// Per-clip statistics that the class definition is built on. All quantities
// derive from per-frame voxel mass m_t and intensity-weighted centroids.
struct ClipStats {
    double disp_h = 0.0;       // net centroid displacement, height axis
    double disp_w = 0.0;       // net centroid displacement, width axis
    double coherence = 0.0;    // |net displacement| / sum of per-step moves
    int dominant_bin = 0;      // DFT bin (1..T/2) of the detrended mass curve
    double modulation = 0.0;   // dominant-bin amplitude / mean mass
};

// The statistics are motion-energy based and therefore robust to static
// nuisances: subtracting the per-pixel temporal mean cancels any constant
// background offset and any fixed distractor shape exactly, so only change
// over time survives. Positive residuals above 25% of the frame peak form the
// moving mass whose weighted centroid is tracked per frame. Net displacement
// is the mass-weighted linear fit of the centroid track scaled to the clip
// duration, so frames with little motion energy cannot bias it.
template <typename T>
ClipStats compute_clip_stats(const Tensor<T>& clip) {
    require_rank(clip, 4, "clip");
    const std::size_t C = clip.shape()[0], F = clip.shape()[1];
    const std::size_t H = clip.shape()[2], W = clip.shape()[3];
    if (F < 4) throw DimensionError("clip needs at least 4 frames");
    std::vector<double> mu(C * H * W, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
        std::size_t k = 0;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    mu[k++] += static_cast<double>(clip.at4(c, f, h, w));
    }
    for (double& v : mu) v /= static_cast<double>(F);
    std::vector<double> mass(F, 0.0), ch(F, 0.0), cw(F, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
        double peak = 0.0;
        std::size_t k = 0;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    peak = std::max(peak,
                                    static_cast<double>(clip.at4(c, f, h, w)) - mu[k++]);
        const double cut = 0.25 * peak;
        double m = 0.0, sh = 0.0, sw = 0.0;
        k = 0;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w) {
                    const double v = static_cast<double>(clip.at4(c, f, h, w)) - mu[k++];
                    if (v <= cut || peak <= 1e-9) continue;
                    m += v;
                    sh += v * static_cast<double>(h);
                    sw += v * static_cast<double>(w);
                }
        mass[f] = m;
        ch[f] = m > 1e-12 ? sh / m : static_cast<double>(H - 1) / 2.0;
        cw[f] = m > 1e-12 ? sw / m : static_cast<double>(W - 1) / 2.0;
    }
    ClipStats s;
    // mass-weighted least-squares slope of the centroid track
    double msum = 0.0, fbar = 0.0, hbar = 0.0, wbar = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
        msum += mass[f];
        fbar += mass[f] * static_cast<double>(f);
        hbar += mass[f] * ch[f];
        wbar += mass[f] * cw[f];
    }
    if (msum > 1e-12) {
        fbar /= msum;
        hbar /= msum;
        wbar /= msum;
        double sff = 0.0, sfh = 0.0, sfw = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
            const double df = static_cast<double>(f) - fbar;
            sff += mass[f] * df * df;
            sfh += mass[f] * df * (ch[f] - hbar);
            sfw += mass[f] * df * (cw[f] - wbar);
        }
        if (sff > 1e-12) {
            s.disp_h = sfh / sff * static_cast<double>(F - 1);
            s.disp_w = sfw / sff * static_cast<double>(F - 1);
        }
    }
    // path coherence over frames carrying meaningful motion energy
    double peak_mass = 0.0;
    for (double m : mass) peak_mass = std::max(peak_mass, m);
    double steps = 0.0;
    for (std::size_t f = 1; f < F; ++f) {
        if (mass[f] < 0.2 * peak_mass || mass[f - 1] < 0.2 * peak_mass) continue;
        steps += std::hypot(ch[f] - ch[f - 1], cw[f] - cw[f - 1]);
    }
    s.coherence = steps > 1e-9 ? std::hypot(s.disp_h, s.disp_w) / steps : 0.0;
    // dominant nonzero DFT bin of the detrended mass curve
    double mean = 0.0;
    for (double m : mass) mean += m;
    mean /= static_cast<double>(F);
    const double two_pi = 6.283185307179586476925286766559;
    double best = -1.0;
    for (std::size_t k = 1; k <= F / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
            const double ang = two_pi * static_cast<double>(k) * static_cast<double>(f) /
                               static_cast<double>(F);
            re += (mass[f] - mean) * std::cos(ang);
            im -= (mass[f] - mean) * std::sin(ang);
        }
        const double amp = std::hypot(re, im);
        if (amp > best) {
            best = amp;
            s.dominant_bin = static_cast<int>(k);
        }
    }
    s.modulation = mean > 1e-9 ? best / (mean * static_cast<double>(F) / 2.0) : 0.0;
    return s;
}

// Class definition over the statistics (displacement threshold in voxels).
//   0 rightward drift   (disp_w >= +thr, |disp_w| dominant)
//   1 leftward drift    (disp_w <= -thr)
//   2 downward drift    (|disp_h| >= thr and dominant)
//   3 slow pulse        (static blob, dominant mass bin <= split)
//   4 fast pulse        (static blob, dominant mass bin  > split)
inline int classify_clip(const ClipStats& s, double disp_threshold = 4.0, int bin_split = 2) {
    const double ah = std::abs(s.disp_h), aw = std::abs(s.disp_w);
    if (std::max(ah, aw) >= disp_threshold) {
        if (aw >= ah) return s.disp_w > 0 ? 0 : 1;
        return 2;
    }
    return s.dominant_bin <= bin_split ? 3 : 4;
}

// Moving/pulsing Gaussian blob clips on (1, frames, side, side), values in
// [0,1]. The label is recoverable from the tensor alone via classify_clip.
template <typename T>
LabeledDataset<T> gen_synthetic_clips(int K, int per_class, std::size_t frames, std::size_t side,
                                      std::uint64_t seed) {
    if (K != 5) throw ParameterError("gen_synthetic_clips defines exactly 5 classes");
    if (per_class < 1) throw ParameterError("per_class must be >= 1");
    if (frames < 8 || side < 16)
        throw ParameterError("clips need at least 8 frames and a 16-voxel side");
    LabeledDataset<T> ds;
    ds.classes = K;
    ds.sample_shape = {1, frames, side, side};
    ds.seed = seed;
    ds.generator = "synthetic_clips";
    Rng root(seed);
    const double Fd = static_cast<double>(frames);
    const double Sd = static_cast<double>(side);
    const double two_pi = 6.283185307179586476925286766559;
    auto render = [&](int cls, Rng r) {
        const double sigma = r.uniform(1.8, 2.3);
        const double margin = 2.0 * sigma;
        double vh = 0.0, vw = 0.0;          // drift per frame
        double cyc = 0.0, amp = 0.0;        // pulse cycles / amplitude
        if (cls == 0 || cls == 1 || cls == 2) {
            // Net travel must stay well above the classifier's displacement
            // threshold even after border truncation shrinks the measured
            // centroid track.
            const double avail = Sd - 2.0 * margin;
            const double span_lo = std::min(avail, std::max(6.0, 0.6 * avail));
            const double speed = r.uniform(span_lo, avail) / (Fd - 1.0);
            if (cls == 0) vw = speed;
            if (cls == 1) vw = -speed;
            if (cls == 2) vh = speed;
        } else {
            cyc = cls == 3 ? 1.0 : 3.0;     // slow vs fast pulse
            amp = r.uniform(0.4, 0.55);
        }
        const double phase = r.uniform(0.0, two_pi);
        // Nuisance factors carry no class information. The constant background
        // offset and the static distractor blob are the interesting ones: a
        // zero-DC transform stage removes the offset exactly and its
        // temporal-frequency channels are blind to anything constant in time,
        // while a plain convolution stack has to learn to ignore both from
        // data.
        const double offset = r.uniform(0.0, 0.25);
        const double contrast = r.uniform(0.8, 1.2);
        const double dist_sigma = r.uniform(1.5, 2.5);
        const double dist_inten = r.uniform(0.4, 0.8);
        // path centered so mean position carries no class information
        const double span_h = vh * (Fd - 1.0), span_w = vw * (Fd - 1.0);
        auto start = [&](double span) {
            const double lo = margin + std::max(0.0, -span);
            const double hi = Sd - margin - std::max(0.0, span);
            return lo + (hi - lo) * r.uniform();
        };
        const double h0 = start(span_h);
        const double w0 = start(span_w);
        // Place the distractor away from the blob's path so the two shapes do
        // not blend (best of a fixed number of candidates, which keeps the
        // random stream layout identical for every sample).
        double dist_h = 0.0, dist_w = 0.0, dist_best = -1.0;
        for (int cand = 0; cand < 16; ++cand) {
            const double py = r.uniform(2.0 * dist_sigma, Sd - 2.0 * dist_sigma);
            const double px = r.uniform(2.0 * dist_sigma, Sd - 2.0 * dist_sigma);
            // distance from (py,px) to the segment (h0,w0) -> (h0+span_h,w0+span_w)
            const double seg2 = span_h * span_h + span_w * span_w;
            double t = seg2 > 1e-12
                           ? ((py - h0) * span_h + (px - w0) * span_w) / seg2
                           : 0.0;
            t = std::max(0.0, std::min(1.0, t));
            const double dd = std::hypot(py - (h0 + t * span_h), px - (w0 + t * span_w));
            if (dd > dist_best) {
                dist_best = dd;
                dist_h = py;
                dist_w = px;
            }
        }
        Tensor<T> clip({1, frames, side, side});
        for (std::size_t f = 0; f < frames; ++f) {
            const double fc = static_cast<double>(f);
            const double chc = h0 + vh * fc;
            const double cwc = w0 + vw * fc;
            double inten = 1.0;
            if (amp > 0.0)
                inten = 1.0 + amp * std::sin(two_pi * cyc * fc / Fd + phase);
            inten = contrast * std::max(0.15, std::min(1.6, inten));
            for (std::size_t h = 0; h < side; ++h)
                for (std::size_t w = 0; w < side; ++w) {
                    const double dh = static_cast<double>(h) - chc;
                    const double dw = static_cast<double>(w) - cwc;
                    const double g =
                        inten * std::exp(-(dh * dh + dw * dw) / (2.0 * sigma * sigma));
                    const double eh = static_cast<double>(h) - dist_h;
                    const double ew = static_cast<double>(w) - dist_w;
                    const double d = dist_inten *
                                     std::exp(-(eh * eh + ew * ew) /
                                              (2.0 * dist_sigma * dist_sigma));
                    const double noise = 0.02 * r.uniform();
                    clip.at4(0, f, h, w) =
                        static_cast<T>(std::min(1.0, g + d + offset + noise));
                }
        }
        return clip;
    };
    for (int cls = 0; cls < K; ++cls)
        for (int i = 0; i < per_class; ++i) {
            Rng sample_rng = root.child(static_cast<std::uint64_t>(cls) * 1000003ull +
                                        static_cast<std::uint64_t>(i));
            // Rejection sampling keeps the invariant that every emitted clip's
            // label is recoverable from the tensor alone; retries are rare and
            // fully deterministic (attempt index extends the stream tag).
            bool accepted = false;
            for (std::uint64_t attempt = 0; attempt < 64 && !accepted; ++attempt) {
                Tensor<T> clip = render(cls, sample_rng.child(attempt));
                const ClipStats st = compute_clip_stats(clip);
                if (classify_clip(st) != cls) continue;
                // demand a safety band around the decision threshold so every
                // emitted sample is classified with a clear margin
                const double d = std::max(std::abs(st.disp_h), std::abs(st.disp_w));
                if (cls <= 2 ? d < 5.0 : d > 3.0) continue;
                ds.samples.push_back(std::move(clip));
                ds.labels.push_back(cls);
                accepted = true;
            }
            if (!accepted)
                throw NumericError(
                    "clip generator could not realize a sample of class " +
                    std::to_string(cls) + " whose statistics recover its label");
        }
    return ds;
}

// ---- splits ----------------------------------------------------------------

// Stratified split: within each class, indices are shuffled by the seed and
// dealt to train/val/test by the given fractions (val/test get the rounding
// remainders). Splits are disjoint and stable for a fixed seed.
template <typename T>
std::array<LabeledDataset<T>, 3> split_dataset(const LabeledDataset<T>& ds, double train_frac,
                                               double val_frac, std::uint64_t seed) {
    if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0)
        throw ParameterError("split fractions must be nonnegative and sum to <= 1");
    std::array<LabeledDataset<T>, 3> out;
    for (auto& o : out) {
        o.classes = ds.classes;
        o.sample_shape = ds.sample_shape;
        o.seed = seed;
        o.generator = ds.generator;
    }
    Rng root(seed);
    for (int c = 0; c < ds.classes; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == c) idx.push_back(i);
        Rng r = root.child(static_cast<std::uint64_t>(c));
        r.shuffle(idx);
        const std::size_t ntrain = static_cast<std::size_t>(
            std::floor(train_frac * static_cast<double>(idx.size()) + 0.5));
        const std::size_t nval = static_cast<std::size_t>(
            std::floor(val_frac * static_cast<double>(idx.size()) + 0.5));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const int which = i < ntrain ? 0 : (i < ntrain + nval ? 1 : 2);
            out[static_cast<std::size_t>(which)].samples.push_back(ds.samples[idx[i]]);
            out[static_cast<std::size_t>(which)].labels.push_back(c);
        }
    }
    return out;
}

// ---- on-disk layout ----------------------------------------------------------

template <typename T>
void save_dataset_dir(const std::string& root, const std::string& split,
                      const LabeledDataset<T>& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(root);
    std::map<int, int> counter;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int c = ds.labels[i];
        fs::create_directories(fs::path(root) / split / std::to_string(c));
        const int k = counter[c]++;
        std::ostringstream name;
        name << std::setw(5) << std::setfill('0') << k << ".rten";
        save_rten((fs::path(root) / split / std::to_string(c) / name.str()).string(),
                  ds.samples[i]);
    }
    // manifest: create or append the split line
    const fs::path mpath = fs::path(root) / "manifest.txt";
    std::string existing;
    if (fs::exists(mpath)) {
        std::ifstream in(mpath);
        std::ostringstream os;
        os << in.rdbuf();
        existing = os.str();
    } else {
        std::ostringstream os;
        os << "relpv-dataset 1\n";
        os << "generator " << ds.generator << "\n";
        os << "classes " << ds.classes << "\n";
        os << "shape " << ds.sample_shape[0] << 'x' << ds.sample_shape[1] << 'x'
           << ds.sample_shape[2] << 'x' << ds.sample_shape[3] << "\n";
        os << "seed " << ds.seed << "\n";
        existing = os.str();
    }
    std::ostringstream line;
    line << "split " << split << ' ' << ds.size() << "\n";
    std::ofstream outf(mpath, std::ios::trunc);
    outf << existing << line.str();
    if (!outf) throw Error("cannot write manifest: " + mpath.string());
}

template <typename T>
LabeledDataset<T> load_dataset_dir(const std::string& root, const std::string& split) {
    namespace fs = std::filesystem;
    const fs::path mpath = fs::path(root) / "manifest.txt";
    std::ifstream in(mpath);
    if (!in) throw Error("cannot open dataset manifest: " + mpath.string());
    LabeledDataset<T> ds;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        if (!header) {
            if (key != "relpv-dataset")
                throw ParameterError("bad dataset manifest header: " + mpath.string());
            header = true;
            continue;
        }
        if (key == "generator")
            is >> ds.generator;
        else if (key == "classes")
            is >> ds.classes;
        else if (key == "seed")
            is >> ds.seed;
        else if (key == "shape") {
            std::string s;
            is >> s;
            ds.sample_shape.clear();
            std::size_t pos = 0;
            while (true) {
                std::size_t x = s.find('x', pos);
                ds.sample_shape.push_back(
                    std::stoull(x == std::string::npos ? s.substr(pos) : s.substr(pos, x - pos)));
                if (x == std::string::npos) break;
                pos = x + 1;
            }
        }
    }
    if (ds.classes < 2) throw ParameterError("dataset manifest lacks a class count");
    const fs::path sroot = fs::path(root) / split;
    if (!fs::exists(sroot)) throw Error("dataset split not found: " + sroot.string());
    for (int c = 0; c < ds.classes; ++c) {
        const fs::path cdir = sroot / std::to_string(c);
        if (!fs::exists(cdir)) continue;
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(cdir))
            if (e.path().extension() == ".rten") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            Tensor<T> t = load_rten<T>(f);
            if (t.shape() != ds.sample_shape)
                throw DimensionError("sample " + f + " has shape " + shape_to_string(t.shape()) +
                                     ", manifest says " + shape_to_string(ds.sample_shape));
            ds.samples.push_back(std::move(t));
            ds.labels.push_back(c);
        }
    }
    if (ds.samples.empty()) throw Error("dataset split is empty: " + sroot.string());
    return ds;
}

}  // namespace relpv
