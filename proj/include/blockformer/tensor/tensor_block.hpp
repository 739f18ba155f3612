#pragma once

#include <compare>
#include <cstdint>
#include <cstring>
#include <vector>

namespace blockformer {

/// Tile coordinate inside a blocked matrix. Ordering is row-major.
struct BlockKey {
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    auto operator<=>(const BlockKey&) const = default;
};

/// One tile of a matrix: coordinates plus a row-major payload of rows*cols floats.
struct TensorBlock {
    std::uint32_t block_row = 0;
    std::uint32_t block_col = 0;
    std::uint16_t rows = 0;
    std::uint16_t cols = 0;
    std::vector<float> data;

    TensorBlock() = default;
    TensorBlock(BlockKey key, std::uint16_t r, std::uint16_t c)
        : block_row(key.row), block_col(key.col), rows(r), cols(c),
          data(static_cast<std::size_t>(r) * c, 0.0f) {}

    BlockKey key() const { return {block_row, block_col}; }
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }

    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Same coordinates, dims and payload bytes.
inline bool bit_equal(const TensorBlock& a, const TensorBlock& b) {
    return a.key() == b.key() && a.rows == b.rows && a.cols == b.cols &&
           a.data.size() == b.data.size() &&
           (a.data.empty() ||
            std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

/// Same dims and payload bytes, coordinates ignored.
inline bool same_payload(const TensorBlock& a, const TensorBlock& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data.size() == b.data.size() &&
           (a.data.empty() ||
            std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

}  // namespace blockformer
