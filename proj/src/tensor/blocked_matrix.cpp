#include "blockformer/tensor/blocked_matrix.hpp"

#include <string>

#include "blockformer/common/error.hpp"

namespace blockformer {

namespace {

std::string key_str(BlockKey k) {
    return "(" + std::to_string(k.row) + ", " + std::to_string(k.col) + ")";
}

}  // namespace

BlockedMatrix::BlockedMatrix(std::size_t rows, std::size_t cols, std::size_t block_dim)
    : rows_(rows), cols_(cols), block_dim_(block_dim) {
    if (rows == 0 || cols == 0) throw InvalidArgumentError("matrix dims must be at least 1x1");
    if (block_dim == 0) throw InvalidArgumentError("block_dim must be at least 1");
    if (block_dim > 0xFFFF) throw InvalidArgumentError("block_dim exceeds 65535");
}

BlockedMatrix BlockedMatrix::zeros(std::size_t rows, std::size_t cols, std::size_t block_dim) {
    BlockedMatrix m(rows, cols, block_dim);
    for (std::size_t bi = 0; bi < m.block_rows(); ++bi) {
        for (std::size_t bj = 0; bj < m.block_cols(); ++bj) {
            m.blocks_.emplace(
                BlockKey{static_cast<std::uint32_t>(bi), static_cast<std::uint32_t>(bj)},
                TensorBlock({static_cast<std::uint32_t>(bi), static_cast<std::uint32_t>(bj)},
                            static_cast<std::uint16_t>(m.tile_rows(bi)),
                            static_cast<std::uint16_t>(m.tile_cols(bj))));
        }
    }
    return m;
}

std::size_t BlockedMatrix::tile_rows(std::size_t bi) const {
    return bi + 1 < block_rows() ? block_dim_ : rows_ - bi * block_dim_;
}

std::size_t BlockedMatrix::tile_cols(std::size_t bj) const {
    return bj + 1 < block_cols() ? block_dim_ : cols_ - bj * block_dim_;
}

const TensorBlock& BlockedMatrix::block(BlockKey key) const {
    auto it = blocks_.find(key);
    if (it == blocks_.end()) throw CorruptionError("missing tensor block " + key_str(key));
    return it->second;
}

TensorBlock& BlockedMatrix::block(BlockKey key) {
    auto it = blocks_.find(key);
    if (it == blocks_.end()) throw CorruptionError("missing tensor block " + key_str(key));
    return it->second;
}

void BlockedMatrix::put(TensorBlock b) {
    const BlockKey key = b.key();
    if (key.row >= block_rows() || key.col >= block_cols()) {
        throw ShapeError("block " + key_str(key) + " outside a " + std::to_string(block_rows()) +
                         "x" + std::to_string(block_cols()) + " tiling");
    }
    if (b.rows != tile_rows(key.row) || b.cols != tile_cols(key.col) || b.data.size() != b.size()) {
        throw ShapeError("block " + key_str(key) + " has dims " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ", expected " +
                         std::to_string(tile_rows(key.row)) + "x" +
                         std::to_string(tile_cols(key.col)));
    }
    blocks_.insert_or_assign(key, std::move(b));
}

float BlockedMatrix::at(std::size_t i, std::size_t j) const {
    const auto& b = block(i / block_dim_, j / block_dim_);
    return b.at(i % block_dim_, j % block_dim_);
}

void BlockedMatrix::validate() const {
    if (blocks_.size() != expected_block_count()) {
        for (std::size_t bi = 0; bi < block_rows(); ++bi) {
            for (std::size_t bj = 0; bj < block_cols(); ++bj) (void)block(bi, bj);
        }
        throw CorruptionError("tiling has " + std::to_string(blocks_.size()) + " blocks, expected " +
                              std::to_string(expected_block_count()));
    }
    for (const auto& [key, b] : blocks_) {
        if (key != b.key() || key.row >= block_rows() || key.col >= block_cols() ||
            b.rows != tile_rows(key.row) || b.cols != tile_cols(key.col) ||
            b.data.size() != b.size()) {
            throw CorruptionError("inconsistent tensor block " + key_str(key));
        }
    }
}

bool bit_equal(const BlockedMatrix& a, const BlockedMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.block_dim() != b.block_dim() ||
        a.block_count() != b.block_count()) {
        return false;
    }
    auto ib = b.blocks().begin();
    for (const auto& [key, block] : a.blocks()) {
        if (ib->first != key || !bit_equal(block, ib->second)) return false;
        ++ib;
    }
    return true;
}

std::size_t BatchedTensor::block_count() const {
    std::size_t n = 0;
    for (const auto& m : items) n += m.block_count();
    return n;
}

void BatchedTensor::validate() const {
    for (const auto& m : items) {
        if (m.rows() != items.front().rows() || m.cols() != items.front().cols() ||
            m.block_dim() != items.front().block_dim()) {
            throw ShapeError("batched tensor items disagree on dims or block_dim");
        }
    }
}

bool bit_equal(const BatchedTensor& a, const BatchedTensor& b) {
    if (a.items.size() != b.items.size()) return false;
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (!bit_equal(a.items[i], b.items[i])) return false;
    }
    return true;
}

}  // namespace blockformer
