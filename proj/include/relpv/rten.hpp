#pragma once

// RTEN: minimal binary tensor container.
//
//   bytes 0..3   magic "RTEN"
//   byte  4      format version (1)
//   byte  5      dtype: 0 = f32, 1 = f64
//   byte  6      rank (1..8)
//   then         rank x u64 little-endian extents
//   then         element data, little-endian, row-major
//
// Loads are strict: wrong magic, version, dtype code, truncation or trailing
// garbage raise FormatError with the byte offset of the problem.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "relpv/errors.hpp"
#include "relpv/tensor.hpp"

namespace relpv {

static_assert(std::endian::native == std::endian::little,
              "RTEN serialization assumes a little-endian host");

namespace detail {

template <typename T>
constexpr std::uint8_t rten_dtype_code() {
    if constexpr (std::is_same_v<T, float>)
        return 0;
    else
        return 1;
}

inline std::vector<char> read_all_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for reading: " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> buf(static_cast<std::size_t>(len));
    if (len > 0 && !in.read(buf.data(), len)) throw Error("read failed: " + path);
    return buf;
}

}  // namespace detail

template <typename T>
void save_rten(const std::string& path, const Tensor<T>& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + path);
    out.write("RTEN", 4);
    const std::uint8_t header[3] = {1, detail::rten_dtype_code<T>(),
                                    static_cast<std::uint8_t>(t.rank())};
    out.write(reinterpret_cast<const char*>(header), 3);
    for (std::size_t e : t.shape()) {
        const std::uint64_t e64 = e;
        out.write(reinterpret_cast<const char*>(&e64), 8);
    }
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!out) throw Error("write failed: " + path);
}

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

inline AnyTensor load_rten_any(const std::string& path) {
    const std::vector<char> buf = detail::read_all_bytes(path);
    std::size_t off = 0;
    auto need = [&](std::size_t n, const char* what) {
        if (off + n > buf.size())
            throw FormatError(std::string("truncated RTEN file (") + what + ") in " + path, off);
    };
    need(4, "magic");
    if (std::memcmp(buf.data(), "RTEN", 4) != 0)
        throw FormatError("bad magic in " + path, 0);
    off = 4;
    need(3, "header");
    const std::uint8_t version = static_cast<std::uint8_t>(buf[4]);
    const std::uint8_t dtype = static_cast<std::uint8_t>(buf[5]);
    const std::uint8_t rank = static_cast<std::uint8_t>(buf[6]);
    if (version != 1) throw FormatError("unsupported RTEN version " + std::to_string(version), 4);
    if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype), 5);
    if (rank < 1 || rank > 8) throw FormatError("rank out of range: " + std::to_string(rank), 6);
    off = 7;
    Shape shape(rank);
    for (std::uint8_t i = 0; i < rank; ++i) {
        need(8, "extent");
        std::uint64_t e;
        std::memcpy(&e, buf.data() + off, 8);
        if (e == 0) throw FormatError("zero extent", off);
        shape[i] = static_cast<std::size_t>(e);
        off += 8;
    }
    const std::size_t count = shape_numel(shape);
    auto load_payload = [&](auto tag) -> AnyTensor {
        using U = decltype(tag);
        need(count * sizeof(U), "payload");
        Tensor<U> t;
        t.set_shape_unchecked(shape);
        t.storage().resize(count);
        std::memcpy(t.storage().data(), buf.data() + off, count * sizeof(U));
        off += count * sizeof(U);
        if (off != buf.size())
            throw FormatError("trailing bytes after payload", off);
        return t;
    };
    return dtype == 0 ? load_payload(float{}) : load_payload(double{});
}

// Typed load; the on-disk dtype must match T exactly.
template <typename T>
Tensor<T> load_rten(const std::string& path) {
    AnyTensor any = load_rten_any(path);
    if (!std::holds_alternative<Tensor<T>>(any))
        throw FormatError("dtype mismatch loading " + path, 5);
    return std::get<Tensor<T>>(std::move(any));
}

}  // namespace relpv
