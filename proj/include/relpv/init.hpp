#pragma once

// Orthogonal weight initialization. The tensor is viewed as a matrix with
// shape (first extent, product of the rest); the shorter side is made
// orthonormal by modified Gram-Schmidt with one re-orthogonalization sweep.
// A 1x1 matrix degenerates to +/-1. If a pivot collapses (numerically
// dependent draws; vanishingly rare), that vector falls back to scaled
// uniform noise and the event is reported through `used_fallback`.

#include <cmath>
#include <cstddef>
#include <vector>

#include "relpv/rng.hpp"
#include "relpv/tensor.hpp"

namespace relpv {

template <typename T>
Tensor<T> orthogonal_init(const Shape& shape, Rng& rng, bool* used_fallback = nullptr) {
    if (used_fallback) *used_fallback = false;
    const std::size_t rows = shape.at(0);
    std::size_t cols = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];

    if (rows == 1 && cols == 1) {
        Tensor<T> t(shape);
        t[0] = rng.uniform() < 0.5 ? T(-1) : T(1);
        return t;
    }

    // vecs = the side being orthonormalized, each of length `len`
    const bool by_rows = rows <= cols;
    const std::size_t nvec = by_rows ? rows : cols;
    const std::size_t len = by_rows ? cols : rows;
    std::vector<std::vector<double>> v(nvec, std::vector<double>(len));
    for (auto& x : v)
        for (double& e : x) e = rng.normal();

    const double fallback_scale = std::sqrt(3.0 / static_cast<double>(len));
    for (std::size_t i = 0; i < nvec; ++i) {
        for (int sweep = 0; sweep < 2; ++sweep)
            for (std::size_t j = 0; j < i; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < len; ++k) dot += v[i][k] * v[j][k];
                for (std::size_t k = 0; k < len; ++k) v[i][k] -= dot * v[j][k];
            }
        double norm = 0.0;
        for (double e : v[i]) norm += e * e;
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
            if (used_fallback) *used_fallback = true;
            for (double& e : v[i]) e = rng.uniform(-fallback_scale, fallback_scale);
            norm = 0.0;
            for (double e : v[i]) norm += e * e;
            norm = std::sqrt(norm);
        }
        for (double& e : v[i]) e /= norm;
    }

    Tensor<T> t(shape);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            t[r * cols + c] = static_cast<T>(by_rows ? v[r][c] : v[c][r]);
    return t;
}

}  // namespace relpv
