#pragma once

#include <cstdint>

#include "blockformer/tensor/tensor_block.hpp"

namespace blockformer::storage {

/// 64-bit content hash of a block's dims and payload bytes (coordinates are
/// not hashed). FNV-1a followed by a splitmix finalizer; stable across runs
/// and platforms.
std::uint64_t fingerprint_block(const TensorBlock& b);

}  // namespace blockformer::storage
