#pragma once

// Fixed short-term Fourier transform basis over an odd n x n x n neighborhood.
//
// Thirteen first-octant frequency points v (components in {-k, 0, +k}, k=1/n)
// are evaluated as w_v(y) = exp(-j 2 pi v . y) for window offsets
// y in {-r..r}^3, r = (n-1)/2. Packing them as rows gives the 26 x n^3 real
// matrix W: row 2i holds Re(w_vi), row 2i+1 holds Im(w_vi) (interleaved
// layout; see interleaved_to_blocked_row for the all-real-then-all-imag
// alternative). Columns enumerate y row-major with the depth offset slowest:
// col(y) = ((y_d+r)*n + (y_h+r))*n + (y_w+r).
//
// Every w_v factorizes over axes: w_v(y) = g_d(y_d) g_h(y_h) g_w(y_w) with
// g_a(t) = exp(-j 2 pi v_a t). The per-axis factors are kept alongside W so
// the transform can run as three cascaded 1-D passes.
//
// The matrix is a fixed function of n alone: it is built in double precision,
// never trained, and bitwise reproducible.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/tensor.hpp"

namespace relpv {

// One frequency point; signs[a] in {-1,0,+1} scales k = 1/n on axis a
// (0 = depth, 1 = height, 2 = width).
struct FrequencyPoint {
    std::array<int, 3> signs;
};

// The 13 lowest nonzero frequency points, one per +/- pair, in their
// conventional order. No point is the negation of another, so the 26
// real/imaginary rows are linearly independent.
inline const std::array<FrequencyPoint, 13>& frequency_points() {
    static const std::array<FrequencyPoint, 13> pts = {{
        {{1, 0, 0}},   // v1
        {{1, 0, 1}},   // v2
        {{1, 0, -1}},  // v3
        {{0, 1, 0}},   // v4
        {{0, 1, 1}},   // v5
        {{0, 1, -1}},  // v6
        {{1, 1, 0}},   // v7
        {{1, 1, 1}},   // v8
        {{1, 1, -1}},  // v9
        {{1, -1, 0}},  // v10
        {{1, -1, 1}},  // v11
        {{1, -1, -1}}, // v12
        {{0, 0, 1}},   // v13
    }};
    return pts;
}

struct StftBasis {
    int n = 0;                // window extent per axis (odd, >= 3)
    int r = 0;                // half window, n = 2r + 1
    Tensor<double> W;         // (26, n^3)
    // sep_factors[i][a][t] = exp(-j 2 pi * signs[a]/n * (t - r)), t = 0..n-1
    std::array<std::array<std::vector<std::complex<double>>, 3>, 13> sep_factors;

    std::size_t column_of(int yd, int yh, int yw) const {
        return (static_cast<std::size_t>(yd + r) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(yh + r)) *
                   static_cast<std::size_t>(n) +
               static_cast<std::size_t>(yw + r);
    }
};

// Maps the interleaved row index (Re0, Im0, Re1, Im1, ...) to the position
// the same row would occupy in the blocked layout (all 13 real rows first,
// then all 13 imaginary rows).
inline std::size_t interleaved_to_blocked_row(std::size_t row) {
    if (row >= 26) throw IndexError("basis row " + std::to_string(row) + " out of range");
    return (row % 2 == 0) ? row / 2 : 13 + row / 2;
}

inline StftBasis build_basis(int n) {
    if (n < 3 || n % 2 == 0)
        throw ParameterError("STFT window n must be odd and >= 3, got " + std::to_string(n));
    StftBasis b;
    b.n = n;
    b.r = (n - 1) / 2;
    const double two_pi = 6.283185307179586476925286766559;
    const auto& pts = frequency_points();
    for (std::size_t i = 0; i < 13; ++i)
        for (int a = 0; a < 3; ++a) {
            auto& f = b.sep_factors[i][a];
            f.resize(static_cast<std::size_t>(n));
            for (int t = 0; t < n; ++t) {
                const double phase =
                    -two_pi * static_cast<double>(pts[i].signs[a]) * static_cast<double>(t - b.r) /
                    static_cast<double>(n);
                f[static_cast<std::size_t>(t)] = std::polar(1.0, phase);
            }
        }
    const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
    b.W = Tensor<double>({26, n3});
    for (std::size_t i = 0; i < 13; ++i)
        for (int yd = -b.r; yd <= b.r; ++yd)
            for (int yh = -b.r; yh <= b.r; ++yh)
                for (int yw = -b.r; yw <= b.r; ++yw) {
                    const std::complex<double> w = b.sep_factors[i][0][static_cast<std::size_t>(yd + b.r)] *
                                                   b.sep_factors[i][1][static_cast<std::size_t>(yh + b.r)] *
                                                   b.sep_factors[i][2][static_cast<std::size_t>(yw + b.r)];
                    const std::size_t col = b.column_of(yd, yh, yw);
                    b.W.at2(2 * i, col) = w.real();
                    b.W.at2(2 * i + 1, col) = w.imag();
                }
    return b;
}

// Shared cache so models with several blocks of the same n reuse one basis.
// Process-wide table cache: blocks with the same window size share one basis.
inline std::shared_ptr<const StftBasis> shared_basis(int n) {
    static std::map<int, std::weak_ptr<const StftBasis>> cache;
    static std::mutex guard;
    const std::lock_guard<std::mutex> lock(guard);
    auto& slot = cache[n];
    if (auto sp = slot.lock()) return sp;
    auto sp = std::make_shared<const StftBasis>(build_basis(n));
    slot = sp;
    return sp;
}

}  // namespace relpv
