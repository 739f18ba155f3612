#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "blockformer/tensor/tensor_block.hpp"

namespace blockformer::storage {

struct DedupConfig {
    /// Largest mean-squared element distance at which one block may stand in
    /// for another. 0 means exact duplicates only.
    double threshold_t = 0.0;
    std::size_t hyperplanes = 64;
    std::size_t bands = 8;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Sign-of-random-projection bits, one per hyperplane.
struct Signature {
    std::vector<std::uint64_t> words;
    std::size_t bits = 0;

    bool bit(std::size_t i) const { return (words[i / 64] >> (i % 64)) & 1u; }
    bool operator==(const Signature&) const = default;
};

/// Random-hyperplane LSH over flattened tiles. Hyperplanes have block_dim^2
/// entries; a ragged tile is zero-extended in place, so element (r, c) always
/// meets coordinate r * block_dim + c.
class HyperplaneLsh {
public:
    HyperplaneLsh(std::size_t block_dim, const DedupConfig& cfg);

    std::size_t block_dim() const { return block_dim_; }

    Signature signature(const TensorBlock& b) const;

    /// One key per band, each hashing the band index with its bits.
    std::vector<std::uint64_t> band_keys(const Signature& s) const;

private:
    std::size_t block_dim_;
    std::size_t hyperplanes_;
    std::size_t bands_;
    std::vector<float> planes_;  // hyperplanes_ rows of block_dim_^2 unit vectors
};

}  // namespace blockformer::storage
