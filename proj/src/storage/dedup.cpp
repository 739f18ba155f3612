#include "blockformer/storage/dedup.hpp"

#include <map>
#include <set>

#include "blockformer/common/error.hpp"
#include "blockformer/storage/near_duplicates.hpp"

namespace blockformer::storage {

BlockKey SetLayout::key_at(std::size_t i) const {
    const std::size_t bcols = (cols + block_dim - 1) / block_dim;
    return {static_cast<std::uint32_t>(i / bcols), static_cast<std::uint32_t>(i % bcols)};
}

std::size_t SetLayout::tile_rows(std::uint32_t bi) const {
    return std::min(block_dim, rows - static_cast<std::size_t>(bi) * block_dim);
}

std::size_t SetLayout::tile_cols(std::uint32_t bj) const {
    return std::min(block_dim, cols - static_cast<std::size_t>(bj) * block_dim);
}

const SetLayout& DedupResult::set(const std::string& name) const {
    for (const auto& s : sets) {
        if (s.name == name) return s;
    }
    throw InvalidArgumentError("unknown set '" + name + "'");
}

DedupResult deduplicate(std::span<const NamedBlockSet> sets, const DedupConfig& cfg) {
    cfg.validate();
    DedupResult result;
    std::map<std::string, std::uint32_t> class_ids;
    std::set<std::string> names;

    // Flatten: tile i belongs to set owner[i].
    std::vector<TensorBlock> tiles;
    std::vector<std::size_t> owner;
    std::size_t block_dim = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& in = sets[s];
        if (!names.insert(in.name).second) {
            throw NameCollisionError("duplicate set name '" + in.name + "'");
        }
        in.matrix.validate();
        auto [it, fresh] = class_ids.emplace(in.role, static_cast<std::uint32_t>(result.classes.size()));
        if (fresh) result.classes.push_back(in.role);
        SetLayout layout{in.name, it->second, in.matrix.rows(), in.matrix.cols(),
                         in.matrix.block_dim(), {}};
        layout.block_ids.reserve(in.matrix.block_count());
        result.sets.push_back(std::move(layout));
        block_dim = std::max(block_dim, in.matrix.block_dim());
        for (const auto& [key, tile] : in.matrix.blocks()) {
            tiles.push_back(tile);
            owner.push_back(s);
        }
    }
    result.input_blocks = tiles.size();

    const Clustering clustering = find_near_duplicates(tiles, cfg, block_dim);
    std::vector<std::uint32_t> stored_id(tiles.size(), 0);
    // Representatives (stored ids) opened so far per cluster root.
    std::map<std::size_t, std::vector<std::uint32_t>> reps;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        auto& cluster_reps = reps[clustering.cluster_of[i]];
        bool placed = false;
        for (std::uint32_t id : cluster_reps) {
            const TensorBlock& rep = result.stored[id].block;
            if (same_payload(rep, tiles[i])) {
                ++result.exact_substitutions;
            } else if (mean_squared_distance(rep, tiles[i]) <= cfg.threshold_t) {
                ++result.near_substitutions;
            } else {
                continue;
            }
            stored_id[i] = id;
            placed = true;
            break;
        }
        if (!placed) {
            const auto id = static_cast<std::uint32_t>(result.stored.size());
            result.stored.push_back(
                StoredBlock{tiles[i], result.sets[owner[i]].class_id, 0, Sharing::kPrivate});
            cluster_reps.push_back(id);
            stored_id[i] = id;
        }
        result.sets[owner[i]].block_ids.push_back(stored_id[i]);
    }

    std::vector<std::set<std::size_t>> referencing(result.stored.size());
    for (std::size_t i = 0; i < tiles.size(); ++i) referencing[stored_id[i]].insert(owner[i]);
    for (std::size_t id = 0; id < result.stored.size(); ++id) {
        auto& sb = result.stored[id];
        sb.ref_sets = static_cast<std::uint32_t>(referencing[id].size());
        sb.sharing = sb.ref_sets >= 2 ? Sharing::kShared : Sharing::kPrivate;
    }
    return result;
}

BlockedMatrix reconstruct(const DedupResult& result, const std::string& name) {
    const SetLayout& layout = result.set(name);
    BlockedMatrix out(layout.rows, layout.cols, layout.block_dim);
    for (std::size_t i = 0; i < layout.block_ids.size(); ++i) {
        const std::uint32_t id = layout.block_ids[i];
        if (id >= result.stored.size()) throw CorruptionError("dangling stored block id");
        TensorBlock t = result.stored[id].block;
        const BlockKey key = layout.key_at(i);
        t.block_row = key.row;
        t.block_col = key.col;
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

}  // namespace blockformer::storage
