#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "blockformer/storage/byte_io.hpp"
#include "blockformer/storage/dedup.hpp"
#include "json.hpp"

namespace blockformer::storage {

inline constexpr std::size_t kDefaultPageCapacity = 65536;

struct PageEntry {
    std::uint32_t stored_id = 0;
    std::string set_name;  // first set referencing the block
    BlockKey key;
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
};

/// Fixed-capacity container of serialized TBLK records laid end to end.
struct Page {
    std::uint32_t page_id = 0;
    std::size_t capacity_bytes = kDefaultPageCapacity;
    std::vector<PageEntry> entries;
    Bytes payload;

    std::size_t used() const { return payload.size(); }
};

struct BlockLocation {
    std::uint32_t page_id = 0;
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
};

/// Set -> location index. Stored-block ids index locations, sharing and
/// equivalence_class.
struct Catalog {
    std::size_t page_capacity = kDefaultPageCapacity;
    std::size_t stage1_pages = 0;
    std::vector<std::string> classes;
    std::vector<BlockLocation> locations;
    std::vector<Sharing> sharing;
    std::vector<std::uint32_t> equivalence_class;
    std::vector<SetLayout> sets;
    /// Stored-block ids per page in payload order.
    std::vector<std::vector<std::uint32_t>> page_blocks;

    const SetLayout& set(const std::string& name) const;
    bool has_set(const std::string& name) const;
};

struct PackedStore {
    Catalog catalog;
    std::vector<Page> pages;
};

/// Two-stage packs the stored blocks (classes from the dedup result) and
/// lays them out in pages.
PackedStore build_packed_store(const DedupResult& dedup, std::size_t page_capacity = kDefaultPageCapacity);

/// Reads a set back; every tile is CRC-checked and must match its layout dims.
BlockedMatrix read_set(const Catalog& catalog, std::span<const Page> pages, const std::string& name);

/// Compact index: id lists are run-length encoded as [start, count] runs and
/// per-block attributes as [value, count] runs. Offsets within a page are
/// implied by block order and lengths.
nlohmann::json catalog_to_json(const Catalog& catalog);
Catalog catalog_from_json(const nlohmann::json& j);

/// Page file: "TPAG" | version u8 | page_id u32 | capacity u32 | used u32 | payload.
Bytes encode_page(const Page& page);
Page decode_page(std::span<const std::uint8_t> bytes);

/// Writes catalog.json and page_<id>.pg files into dir (created if needed).
void write_store(const std::filesystem::path& dir, const PackedStore& store);
/// Loads catalog.json and all referenced page files; page entries are
/// rebuilt from the catalog.
PackedStore load_store(const std::filesystem::path& dir);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace blockformer::storage
