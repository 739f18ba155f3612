#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blockformer/common/dense_matrix.hpp"
#include "blockformer/tensor/blocked_matrix.hpp"

namespace blockformer {

/// Tiles a row-major matrix. Element (i, j) lands in block
/// (i / block_dim, j / block_dim) at local (i % block_dim, j % block_dim).
BlockedMatrix partition(std::span<const float> data, std::size_t rows, std::size_t cols,
                        std::size_t block_dim);
BlockedMatrix partition(const DenseMatrix& dense, std::size_t block_dim);

/// Inverse of partition, bit-exact. Throws CorruptionError on a missing tile.
DenseMatrix reassemble(const BlockedMatrix& m);

/// C(bi, bj) = sum_k A(bi, k) * B(k, bj), accumulated in double per output tile.
BlockedMatrix block_matmul(const BlockedMatrix& a, const BlockedMatrix& b);

BlockedMatrix block_transpose(const BlockedMatrix& a);

/// Key-equality join on (block_row, block_col) followed by a per-element sum.
BlockedMatrix elementwise_add(const BlockedMatrix& a, const BlockedMatrix& b);

struct ElementwiseFn {
    enum class Kind { kExp, kRelu, kScale, kAddConst };
    Kind kind;
    float constant = 0.0f;

    static ElementwiseFn exp() { return {Kind::kExp, 0.0f}; }
    static ElementwiseFn relu() { return {Kind::kRelu, 0.0f}; }
    static ElementwiseFn scale(float c) { return {Kind::kScale, c}; }
    static ElementwiseFn add_const(float c) { return {Kind::kAddConst, c}; }
};

/// Applies f to every element. Throws NumericOverflowError naming the first
/// tile that produced a non-finite value.
BlockedMatrix elementwise_map(const BlockedMatrix& a, ElementwiseFn f);

/// Adds bias[j] to every element of column j.
BlockedMatrix broadcast_row_add(const BlockedMatrix& a, std::span<const float> bias);

/// Columns [begin, begin + count) as a new matrix with the same block_dim.
BlockedMatrix slice_columns(const BlockedMatrix& a, std::size_t begin, std::size_t count);

/// Side-by-side concatenation; all parts need equal rows and block_dim.
BlockedMatrix concat_columns(std::span<const BlockedMatrix> parts);

}  // namespace blockformer
