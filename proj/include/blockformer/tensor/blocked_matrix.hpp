#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "blockformer/tensor/tensor_block.hpp"

namespace blockformer {

/// A logically dense matrix stored as a complete tiling of TensorBlocks.
///
/// Interior tiles are block_dim x block_dim; tiles on the last block row or
/// column carry the exact remainder dims, there is no stored padding. Blocks
/// are kept in a std::map so iteration is always row-major over keys.
class BlockedMatrix {
public:
    BlockedMatrix() = default;
    /// An empty (not yet tiled) matrix; fill with put() or use zeros().
    BlockedMatrix(std::size_t rows, std::size_t cols, std::size_t block_dim);

    static BlockedMatrix zeros(std::size_t rows, std::size_t cols, std::size_t block_dim);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t block_dim() const { return block_dim_; }
    std::size_t block_rows() const { return (rows_ + block_dim_ - 1) / block_dim_; }
    std::size_t block_cols() const { return (cols_ + block_dim_ - 1) / block_dim_; }
    std::size_t expected_block_count() const { return block_rows() * block_cols(); }
    std::size_t block_count() const { return blocks_.size(); }

    /// Tile height of block row `bi` (remainder on the last row).
    std::size_t tile_rows(std::size_t bi) const;
    std::size_t tile_cols(std::size_t bj) const;

    bool has_block(BlockKey key) const { return blocks_.count(key) != 0; }
    /// Throws CorruptionError if the tile is missing.
    const TensorBlock& block(BlockKey key) const;
    TensorBlock& block(BlockKey key);
    const TensorBlock& block(std::size_t bi, std::size_t bj) const {
        return block(BlockKey{static_cast<std::uint32_t>(bi), static_cast<std::uint32_t>(bj)});
    }
    TensorBlock& block(std::size_t bi, std::size_t bj) {
        return block(BlockKey{static_cast<std::uint32_t>(bi), static_cast<std::uint32_t>(bj)});
    }

    /// Inserts or replaces a tile. Throws ShapeError if its key or dims do not
    /// fit this matrix's tiling.
    void put(TensorBlock block);
    void erase(BlockKey key) { blocks_.erase(key); }

    const std::map<BlockKey, TensorBlock>& blocks() const { return blocks_; }

    /// Element (i, j) of the logical matrix.
    float at(std::size_t i, std::size_t j) const;

    /// Throws CorruptionError unless every tile is present with the right dims.
    void validate() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t block_dim_ = 1;
    std::map<BlockKey, TensorBlock> blocks_;
};

bool bit_equal(const BlockedMatrix& a, const BlockedMatrix& b);

/// B matrices sharing identical logical dims and block_dim
/// (Batch x Sequence x Embedding, or Batch*Heads x Sequence x HeadDim).
struct BatchedTensor {
    std::vector<BlockedMatrix> items;

    BatchedTensor() = default;
    explicit BatchedTensor(std::vector<BlockedMatrix> m) : items(std::move(m)) { validate(); }

    std::size_t batch() const { return items.size(); }
    std::size_t block_count() const;
    void validate() const;
};

bool bit_equal(const BatchedTensor& a, const BatchedTensor& b);

}  // namespace blockformer
