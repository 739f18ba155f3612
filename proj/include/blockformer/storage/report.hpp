#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blockformer/storage/page_store.hpp"
#include "json.hpp"

namespace blockformer::storage {

/// Storage accounting for a packed store.
struct StorageReport {
    std::size_t weight_sets = 0;
    std::size_t block_refs = 0;     // tiles across all sets
    std::size_t stored_blocks = 0;  // unique tiles after dedup
    std::size_t shared_blocks = 0;
    std::size_t private_blocks = 0;
    double shared_fraction = 0.0;  // shared_blocks / stored_blocks

    std::size_t naive_bytes = 0;    // every tile serialized on its own
    std::size_t dedup_bytes = 0;    // unique tiles serialized
    std::size_t catalog_bytes = 0;  // catalog.json size
    std::size_t packed_bytes = 0;   // page files, headers included
    std::int64_t dedup_savings_bytes = 0;

    std::size_t page_capacity = 0;
    std::size_t pages_used = 0;
    std::size_t stage1_pages = 0;
    double fill_ratio = 0.0;  // payload bytes / (pages_used * page_capacity)

    std::vector<std::string> sets;

    bool operator==(const StorageReport&) const = default;
};

/// Throws CorruptionError on a dangling block reference or page pointer.
StorageReport storage_report(const Catalog& catalog, std::span<const Page> pages);

void to_json(nlohmann::json& j, const StorageReport& r);
void from_json(const nlohmann::json& j, StorageReport& r);

}  // namespace blockformer::storage
