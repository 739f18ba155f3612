#include "blockformer/storage/page_store.hpp"

#include <fstream>
#include <map>

#include "blockformer/common/error.hpp"
#include "blockformer/storage/block_codec.hpp"
#include "blockformer/storage/packing.hpp"

namespace blockformer::storage {

namespace {

constexpr std::uint8_t kPageFormatVersion = 1;
constexpr std::size_t kPageHeaderBytes = 4 + 1 + 4 + 4 + 4;

using nlohmann::json;

json encode_runs(const std::vector<std::uint32_t>& ids) {
    json runs = json::array();
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t n = 1;
        while (i + n < ids.size() && ids[i + n] == ids[i] + n) ++n;
        runs.push_back({ids[i], n});
        i += n;
    }
    return runs;
}

std::vector<std::uint32_t> decode_runs(const json& runs) {
    std::vector<std::uint32_t> ids;
    for (const auto& r : runs) {
        const auto start = r.at(0).get<std::uint32_t>();
        const auto count = r.at(1).get<std::uint32_t>();
        for (std::uint32_t k = 0; k < count; ++k) ids.push_back(start + k);
    }
    return ids;
}

template <typename T>
json encode_values(const std::vector<T>& values) {
    json runs = json::array();
    for (std::size_t i = 0; i < values.size();) {
        std::size_t n = 1;
        while (i + n < values.size() && values[i + n] == values[i]) ++n;
        runs.push_back({static_cast<std::uint64_t>(values[i]), n});
        i += n;
    }
    return runs;
}

template <typename T>
std::vector<T> decode_values(const json& runs) {
    std::vector<T> out;
    for (const auto& r : runs) {
        const auto v = static_cast<T>(r.at(0).get<std::uint64_t>());
        out.insert(out.end(), r.at(1).get<std::size_t>(), v);
    }
    return out;
}

std::string page_file_name(std::uint32_t id) { return "page_" + std::to_string(id) + ".pg"; }

}  // namespace

const SetLayout& Catalog::set(const std::string& name) const {
    for (const auto& s : sets) {
        if (s.name == name) return s;
    }
    throw InvalidArgumentError("catalog has no set '" + name + "'");
}

bool Catalog::has_set(const std::string& name) const {
    for (const auto& s : sets) {
        if (s.name == name) return true;
    }
    return false;
}

PackedStore build_packed_store(const DedupResult& dedup, std::size_t page_capacity) {
    std::vector<Bytes> records(dedup.stored.size());
    std::vector<PackItem> items;
    items.reserve(dedup.stored.size());
    for (std::uint32_t id = 0; id < dedup.stored.size(); ++id) {
        records[id] = serialize_block(dedup.stored[id].block);
        items.push_back({id, dedup.stored[id].class_id, records[id].size()});
    }
    const PackResult packing = pack_two_stage(items, page_capacity);

    // First referencing set of each stored block, for page entries.
    std::vector<const SetLayout*> first_ref(dedup.stored.size(), nullptr);
    std::vector<BlockKey> first_key(dedup.stored.size());
    for (const auto& s : dedup.sets) {
        for (std::size_t i = 0; i < s.block_ids.size(); ++i) {
            if (!first_ref[s.block_ids[i]]) {
                first_ref[s.block_ids[i]] = &s;
                first_key[s.block_ids[i]] = s.key_at(i);
            }
        }
    }

    PackedStore store;
    Catalog& cat = store.catalog;
    cat.page_capacity = page_capacity;
    cat.stage1_pages = packing.stage1_pages;
    cat.classes = dedup.classes;
    cat.sets = dedup.sets;
    cat.locations.resize(dedup.stored.size());
    for (const auto& sb : dedup.stored) {
        cat.sharing.push_back(sb.sharing);
        cat.equivalence_class.push_back(sb.class_id);
    }
    for (std::size_t p = 0; p < packing.pages.size(); ++p) {
        Page page;
        page.page_id = static_cast<std::uint32_t>(p);
        page.capacity_bytes = page_capacity;
        for (std::uint32_t id : packing.pages[p].items) {
            const auto offset = static_cast<std::uint32_t>(page.payload.size());
            const auto length = static_cast<std::uint32_t>(records[id].size());
            page.payload.insert(page.payload.end(), records[id].begin(), records[id].end());
            page.entries.push_back(
                {id, first_ref[id] ? first_ref[id]->name : std::string{}, first_key[id], offset, length});
            cat.locations[id] = {page.page_id, offset, length};
        }
        cat.page_blocks.push_back(packing.pages[p].items);
        store.pages.push_back(std::move(page));
    }
    return store;
}

BlockedMatrix read_set(const Catalog& catalog, std::span<const Page> pages, const std::string& name) {
    const SetLayout& layout = catalog.set(name);
    BlockedMatrix out(layout.rows, layout.cols, layout.block_dim);
    for (std::size_t i = 0; i < layout.block_ids.size(); ++i) {
        const std::uint32_t id = layout.block_ids[i];
        if (id >= catalog.locations.size()) {
            throw CorruptionError("set '" + name + "' references missing block " + std::to_string(id));
        }
        const BlockLocation& loc = catalog.locations[id];
        if (loc.page_id >= pages.size() || pages[loc.page_id].page_id != loc.page_id ||
            std::size_t{loc.offset} + loc.length > pages[loc.page_id].used()) {
            throw CorruptionError("block " + std::to_string(id) + " points outside page " +
                                  std::to_string(loc.page_id));
        }
        const auto record = std::span(pages[loc.page_id].payload).subspan(loc.offset, loc.length);
        std::size_t consumed = 0;
        TensorBlock t = deserialize_block(record, &consumed);
        const BlockKey key = layout.key_at(i);
        if (consumed != loc.length || t.rows != layout.tile_rows(key.row) ||
            t.cols != layout.tile_cols(key.col)) {
            throw CorruptionError("block " + std::to_string(id) + " does not fit set '" + name + "'");
        }
        t.block_row = key.row;
        t.block_col = key.col;
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

nlohmann::json catalog_to_json(const Catalog& catalog) {
    json pages = json::array();
    for (std::size_t p = 0; p < catalog.page_blocks.size(); ++p) {
        std::size_t used = 0;
        for (std::uint32_t id : catalog.page_blocks[p]) used += catalog.locations[id].length;
        pages.push_back({{"id", p},
                         {"file", page_file_name(static_cast<std::uint32_t>(p))},
                         {"used", used},
                         {"blocks", encode_runs(catalog.page_blocks[p])}});
    }
    std::vector<std::uint32_t> lengths;
    std::vector<std::uint8_t> sharing;
    for (std::size_t id = 0; id < catalog.locations.size(); ++id) {
        lengths.push_back(catalog.locations[id].length);
        sharing.push_back(static_cast<std::uint8_t>(catalog.sharing[id]));
    }
    json sets = json::array();
    for (const auto& s : catalog.sets) {
        sets.push_back({{"name", s.name},
                        {"class", s.class_id},
                        {"rows", s.rows},
                        {"cols", s.cols},
                        {"block_dim", s.block_dim},
                        {"blocks", encode_runs(s.block_ids)}});
    }
    return json{{"format", "blockformer-catalog"},
                {"version", 1},
                {"page_capacity", catalog.page_capacity},
                {"stage1_pages", catalog.stage1_pages},
                {"classes", catalog.classes},
                {"pages", std::move(pages)},
                {"blocks",
                 {{"count", catalog.locations.size()},
                  {"length", encode_values(lengths)},
                  {"class", encode_values(catalog.equivalence_class)},
                  {"sharing", encode_values(sharing)}}},
                {"sets", std::move(sets)}};
}

Catalog catalog_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "blockformer-catalog" || j.at("version") != 1) {
            throw CorruptionError("catalog: unknown format or version");
        }
        Catalog cat;
        cat.page_capacity = j.at("page_capacity").get<std::size_t>();
        cat.stage1_pages = j.value("stage1_pages", std::size_t{0});
        cat.classes = j.at("classes").get<std::vector<std::string>>();
        const auto& blocks = j.at("blocks");
        const auto count = blocks.at("count").get<std::size_t>();
        const auto lengths = decode_values<std::uint32_t>(blocks.at("length"));
        cat.equivalence_class = decode_values<std::uint32_t>(blocks.at("class"));
        for (auto v : decode_values<std::uint8_t>(blocks.at("sharing"))) {
            cat.sharing.push_back(static_cast<Sharing>(v));
        }
        if (lengths.size() != count || cat.equivalence_class.size() != count ||
            cat.sharing.size() != count) {
            throw CorruptionError("catalog: per-block arrays disagree with block count");
        }
        cat.locations.resize(count);
        std::vector<bool> placed(count, false);
        for (const auto& pj : j.at("pages")) {
            const auto page_id = pj.at("id").get<std::uint32_t>();
            if (page_id != cat.page_blocks.size()) throw CorruptionError("catalog: pages out of order");
            auto ids = decode_runs(pj.at("blocks"));
            std::uint32_t offset = 0;
            for (std::uint32_t id : ids) {
                if (id >= count || placed[id]) {
                    throw CorruptionError("catalog: block " + std::to_string(id) + " misplaced");
                }
                placed[id] = true;
                cat.locations[id] = {page_id, offset, lengths[id]};
                offset += lengths[id];
            }
            if (offset != pj.at("used").get<std::size_t>()) {
                throw CorruptionError("catalog: page " + std::to_string(page_id) + " used bytes mismatch");
            }
            cat.page_blocks.push_back(std::move(ids));
        }
        for (std::size_t id = 0; id < count; ++id) {
            if (!placed[id]) throw CorruptionError("catalog: block " + std::to_string(id) + " has no page");
        }
        for (const auto& sj : j.at("sets")) {
            SetLayout s;
            s.name = sj.at("name").get<std::string>();
            s.class_id = sj.at("class").get<std::uint32_t>();
            s.rows = sj.at("rows").get<std::size_t>();
            s.cols = sj.at("cols").get<std::size_t>();
            s.block_dim = sj.at("block_dim").get<std::size_t>();
            s.block_ids = decode_runs(sj.at("blocks"));
            if (s.rows == 0 || s.cols == 0 || s.block_dim == 0) {
                throw CorruptionError("catalog: set '" + s.name + "' has zero dims");
            }
            const std::size_t expected = ((s.rows + s.block_dim - 1) / s.block_dim) *
                                         ((s.cols + s.block_dim - 1) / s.block_dim);
            if (s.block_ids.size() != expected) {
                throw CorruptionError("catalog: set '" + s.name + "' has wrong block count");
            }
            cat.sets.push_back(std::move(s));
        }
        return cat;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("catalog: malformed JSON index: ") + e.what());
    }
}

Bytes encode_page(const Page& page) {
    Bytes out;
    out.reserve(kPageHeaderBytes + page.used());
    ByteWriter w(out);
    w.raw("TPAG");
    w.u8(kPageFormatVersion);
    w.u32(page.page_id);
    w.u32(static_cast<std::uint32_t>(page.capacity_bytes));
    w.u32(static_cast<std::uint32_t>(page.used()));
    out.insert(out.end(), page.payload.begin(), page.payload.end());
    return out;
}

Page decode_page(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (!r.expect("TPAG")) throw CorruptionError("page: bad magic");
    if (r.u8() != kPageFormatVersion) throw CorruptionError("page: unsupported version");
    Page page;
    page.page_id = r.u32();
    page.capacity_bytes = r.u32();
    const std::uint32_t used = r.u32();
    if (used > page.capacity_bytes || r.remaining() != used) {
        throw CorruptionError("page " + std::to_string(page.page_id) + ": payload size mismatch");
    }
    page.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.position()), bytes.end());
    return page;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading '" + path.string() + "'");
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

void write_store(const std::filesystem::path& dir, const PackedStore& store) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& page : store.pages) write_file(dir / page_file_name(page.page_id), encode_page(page));
    const std::string index = catalog_to_json(store.catalog).dump();
    write_file(dir / "catalog.json",
               std::span(reinterpret_cast<const std::uint8_t*>(index.data()), index.size()));
}

PackedStore load_store(const std::filesystem::path& dir) {
    const Bytes raw = read_file(dir / "catalog.json");
    json j;
    try {
        j = json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
        throw CorruptionError("catalog.json: " + std::string(e.what()));
    }
    PackedStore store;
    store.catalog = catalog_from_json(j);
    std::map<std::uint32_t, std::pair<const SetLayout*, BlockKey>> first;
    for (const auto& s : store.catalog.sets) {
        for (std::size_t i = 0; i < s.block_ids.size(); ++i) {
            first.try_emplace(s.block_ids[i], &s, s.key_at(i));
        }
    }
    for (std::uint32_t p = 0; p < store.catalog.page_blocks.size(); ++p) {
        Page page = decode_page(read_file(dir / page_file_name(p)));
        if (page.page_id != p || page.capacity_bytes != store.catalog.page_capacity) {
            throw CorruptionError("page file " + page_file_name(p) + " header disagrees with catalog");
        }
        for (std::uint32_t id : store.catalog.page_blocks[p]) {
            const auto& loc = store.catalog.locations[id];
            auto it = first.find(id);
            page.entries.push_back({id, it != first.end() ? it->second.first->name : std::string{},
                                    it != first.end() ? it->second.second : BlockKey{}, loc.offset,
                                    loc.length});
        }
        store.pages.push_back(std::move(page));
    }
    return store;
}

}  // namespace blockformer::storage
