#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blockformer/storage/lsh.hpp"
#include "blockformer/tensor/blocked_matrix.hpp"

namespace blockformer::storage {

enum class Sharing : std::uint8_t { kPrivate = 0, kShared = 1 };

/// One weight set of one model version. `role` is the equivalence class:
/// the same role across versions (e.g. every "block0.wq") packs together.
struct NamedBlockSet {
    std::string name;
    std::string role;
    BlockedMatrix matrix;
};

/// Where a set's tiles come from after deduplication.
struct SetLayout {
    std::string name;
    std::uint32_t class_id = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t block_dim = 0;
    /// Stored-block id per tile, row-major over block keys.
    std::vector<std::uint32_t> block_ids;

    BlockKey key_at(std::size_t i) const;
    std::size_t tile_rows(std::uint32_t bi) const;
    std::size_t tile_cols(std::uint32_t bj) const;
};

struct StoredBlock {
    TensorBlock block;
    std::uint32_t class_id = 0;
    std::uint32_t ref_sets = 0;  // distinct sets referencing this block
    Sharing sharing = Sharing::kPrivate;
};

struct DedupResult {
    std::vector<std::string> classes;
    std::vector<StoredBlock> stored;
    std::vector<SetLayout> sets;
    std::size_t input_blocks = 0;
    std::size_t exact_substitutions = 0;
    std::size_t near_substitutions = 0;

    const SetLayout& set(const std::string& name) const;
};

/// Clusters every tile of every set (find_near_duplicates), then stores one
/// representative per group. Within a cluster members are visited in input
/// order and attach to the first representative within threshold_t, so every
/// substituted tile is within threshold_t of what it reads back as, even when
/// the cluster was joined through a chain of pairs.
DedupResult deduplicate(std::span<const NamedBlockSet> sets, const DedupConfig& cfg);

/// Rebuilds a set from the dedup result, without pages.
BlockedMatrix reconstruct(const DedupResult& result, const std::string& name);

}  // namespace blockformer::storage
