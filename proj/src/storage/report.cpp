#include "blockformer/storage/report.hpp"

#include "blockformer/common/error.hpp"
#include "blockformer/storage/block_codec.hpp"

namespace blockformer::storage {

StorageReport storage_report(const Catalog& catalog, std::span<const Page> pages) {
    StorageReport r;
    r.page_capacity = catalog.page_capacity;
    r.pages_used = pages.size();
    r.stage1_pages = catalog.stage1_pages;
    r.weight_sets = catalog.sets.size();
    r.stored_blocks = catalog.locations.size();

    for (const auto& s : catalog.sets) {
        r.sets.push_back(s.name);
        for (std::size_t i = 0; i < s.block_ids.size(); ++i) {
            const std::uint32_t id = s.block_ids[i];
            if (id >= catalog.locations.size()) {
                throw CorruptionError("set '" + s.name + "' has dangling block reference " +
                                      std::to_string(id));
            }
            const BlockKey key = s.key_at(i);
            r.naive_bytes += serialized_block_size(s.tile_rows(key.row), s.tile_cols(key.col));
            ++r.block_refs;
        }
    }
    for (std::size_t id = 0; id < catalog.locations.size(); ++id) {
        const BlockLocation& loc = catalog.locations[id];
        if (loc.page_id >= pages.size() ||
            std::size_t{loc.offset} + loc.length > pages[loc.page_id].used()) {
            throw CorruptionError("stored block " + std::to_string(id) + " points outside page " +
                                  std::to_string(loc.page_id));
        }
        r.dedup_bytes += loc.length;
        if (catalog.sharing[id] == Sharing::kShared) {
            ++r.shared_blocks;
        } else {
            ++r.private_blocks;
        }
    }
    std::size_t payload = 0;
    for (const auto& p : pages) {
        payload += p.used();
        r.packed_bytes += encode_page(p).size();
    }
    r.catalog_bytes = catalog_to_json(catalog).dump().size();
    r.dedup_savings_bytes = static_cast<std::int64_t>(r.naive_bytes) - static_cast<std::int64_t>(r.dedup_bytes);
    r.shared_fraction = r.stored_blocks ? double(r.shared_blocks) / double(r.stored_blocks) : 0.0;
    r.fill_ratio = r.pages_used ? double(payload) / double(r.pages_used * r.page_capacity) : 0.0;
    return r;
}

void to_json(nlohmann::json& j, const StorageReport& r) {
    j = nlohmann::json{
        {"weight_sets", r.weight_sets},
        {"block_refs", r.block_refs},
        {"stored_blocks", r.stored_blocks},
        {"shared_blocks", r.shared_blocks},
        {"private_blocks", r.private_blocks},
        {"shared_fraction", r.shared_fraction},
        {"naive_bytes", r.naive_bytes},
        {"dedup_bytes", r.dedup_bytes},
        {"catalog_bytes", r.catalog_bytes},
        {"packed_bytes", r.packed_bytes},
        {"dedup_savings_bytes", r.dedup_savings_bytes},
        {"page_capacity", r.page_capacity},
        {"pages_used", r.pages_used},
        {"stage1_pages", r.stage1_pages},
        {"fill_ratio", r.fill_ratio},
        {"sets", r.sets},
    };
}

void from_json(const nlohmann::json& j, StorageReport& r) {
    j.at("weight_sets").get_to(r.weight_sets);
    j.at("block_refs").get_to(r.block_refs);
    j.at("stored_blocks").get_to(r.stored_blocks);
    j.at("shared_blocks").get_to(r.shared_blocks);
    j.at("private_blocks").get_to(r.private_blocks);
    j.at("shared_fraction").get_to(r.shared_fraction);
    j.at("naive_bytes").get_to(r.naive_bytes);
    j.at("dedup_bytes").get_to(r.dedup_bytes);
    j.at("catalog_bytes").get_to(r.catalog_bytes);
    j.at("packed_bytes").get_to(r.packed_bytes);
    j.at("dedup_savings_bytes").get_to(r.dedup_savings_bytes);
    j.at("page_capacity").get_to(r.page_capacity);
    j.at("pages_used").get_to(r.pages_used);
    j.at("stage1_pages").get_to(r.stage1_pages);
    j.at("fill_ratio").get_to(r.fill_ratio);
    j.at("sets").get_to(r.sets);
}

}  // namespace blockformer::storage
