#pragma once

// Dense row-major tensor of float or double. Rank is dynamic; feature maps
// use rank 4 with axes (channels, depth, height, width), the innermost axis
// (width) being contiguous:  index(c,d,h,w) = ((c*D + d)*H + h)*W + w.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "relpv/errors.hpp"

namespace relpv {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_to_string(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ')';
    return os.str();
}

template <typename T>
class Tensor {
    static_assert(std::is_floating_point_v<T>, "Tensor holds float or double");

public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
        if (shape_.empty())
            throw DimensionError("tensor rank must be at least 1");
        for (std::size_t e : shape_)
            if (e == 0) throw DimensionError("zero extent in shape " + shape_to_string(shape_));
    }

    Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
        if (data_.size() != shape_numel(shape_))
            throw DimensionError("value count " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_to_string(shape_));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 4-D accessors for (c,d,h,w) feature maps.
    T& at4(std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
        return data_[((c * shape_[1] + d) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at4(std::size_t c, std::size_t d, std::size_t h, std::size_t w) const {
        return data_[((c * shape_[1] + d) * shape_[2] + h) * shape_[3] + w];
    }

    // 2-D accessor for matrices (rows, cols).
    T& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    // Reinterpret as a different shape with the same element count.
    Tensor reshaped(Shape s) const {
        if (shape_numel(s) != data_.size())
            throw DimensionError("reshape " + shape_to_string(shape_) + " -> " +
                                 shape_to_string(s) + " changes element count");
        Tensor out;
        out.shape_ = std::move(s);
        out.data_ = data_;
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.set_shape_unchecked(shape_);
        out.storage().resize(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out.storage()[i] = static_cast<U>(data_[i]);
        return out;
    }

    // Internal: used by cast/deserializers that fill storage afterwards.
    void set_shape_unchecked(Shape s) { shape_ = std::move(s); }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_to_string(t.shape()));
}

}  // namespace relpv
