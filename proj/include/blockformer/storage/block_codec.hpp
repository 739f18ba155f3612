#pragma once

#include <cstddef>
#include <span>

#include "blockformer/storage/byte_io.hpp"
#include "blockformer/tensor/tensor_block.hpp"

namespace blockformer::storage {

/// Record layout, all little-endian:
///   "TBLK" | version u8 | block_row u32 | block_col u32 | rows u16 | cols u16 |
///   rows*cols f32 payload, row-major | CRC32 of everything before it, u32
inline constexpr std::uint8_t kBlockFormatVersion = 1;
inline constexpr std::size_t kBlockHeaderBytes = 4 + 1 + 4 + 4 + 2 + 2;

constexpr std::size_t serialized_block_size(std::size_t rows, std::size_t cols) {
    return kBlockHeaderBytes + 4 * rows * cols + 4;
}

Bytes serialize_block(const TensorBlock& b);
void serialize_block(const TensorBlock& b, Bytes& out);

/// Parses one record from the front of `in`; `consumed` receives its length.
/// Bad magic, version, CRC or truncation raise CorruptionError.
TensorBlock deserialize_block(std::span<const std::uint8_t> in, std::size_t* consumed = nullptr);

}  // namespace blockformer::storage
