#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blockformer/storage/lsh.hpp"
#include "blockformer/tensor/tensor_block.hpp"

namespace blockformer::storage {

/// Mean of squared element differences; blocks must have equal dims.
double mean_squared_distance(const TensorBlock& a, const TensorBlock& b);

/// Partition of a block list into near-duplicate clusters.
struct Clustering {
    /// Smallest block index of the cluster each block belongs to.
    std::vector<std::size_t> cluster_of;
    std::size_t candidate_pairs = 0;  // pairs proposed by LSH buckets
    std::size_t verified_pairs = 0;   // pairs passing the exact distance check

    std::size_t cluster_count() const;
    /// Members in index order, clusters ordered by their smallest member.
    std::vector<std::vector<std::size_t>> clusters() const;
};

/// Exact duplicates are merged by a fingerprint pre-pass. For threshold_t > 0,
/// banded LSH proposes candidate pairs, each verified against the exact
/// mean-squared distance; verified pairs are unioned. Blocks with different
/// dims are never merged. block_dim sizes the hyperplanes (0: infer from the
/// largest tile).
Clustering find_near_duplicates(std::span<const TensorBlock> blocks, const DedupConfig& cfg,
                                std::size_t block_dim = 0);

}  // namespace blockformer::storage
