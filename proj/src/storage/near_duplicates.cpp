#include "blockformer/storage/near_duplicates.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "blockformer/common/error.hpp"
#include "blockformer/storage/fingerprint.hpp"

namespace blockformer::storage {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Keeps the smaller index as root so roots are cluster minima.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

double mean_squared_distance(const TensorBlock& a, const TensorBlock& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError("mean_squared_distance: blocks differ in dims");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        s += d * d;
    }
    return a.data.empty() ? 0.0 : s / static_cast<double>(a.data.size());
}

std::size_t Clustering::cluster_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < cluster_of.size(); ++i) n += cluster_of[i] == i;
    return n;
}

std::vector<std::vector<std::size_t>> Clustering::clusters() const {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> slot(cluster_of.size(), 0);
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        if (cluster_of[i] == i) {
            slot[i] = out.size();
            out.emplace_back();
        }
        out[slot[cluster_of[i]]].push_back(i);
    }
    return out;
}

Clustering find_near_duplicates(std::span<const TensorBlock> blocks, const DedupConfig& cfg,
                                std::size_t block_dim) {
    cfg.validate();
    const std::size_t n = blocks.size();
    DisjointSets sets(n);
    Clustering result;

    // Exact pre-pass: equal payload bytes always cluster, independent of LSH.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_hash;
    for (std::size_t i = 0; i < n; ++i) {
        auto& bucket = by_hash[fingerprint_block(blocks[i])];
        for (std::size_t j : bucket) {
            if (same_payload(blocks[i], blocks[j])) {
                sets.unite(i, j);
                break;
            }
        }
        bucket.push_back(i);
    }

    if (cfg.threshold_t > 0.0 && n > 1) {
        if (block_dim == 0) {
            for (const auto& b : blocks) block_dim = std::max<std::size_t>({block_dim, b.rows, b.cols});
        }
        const HyperplaneLsh lsh(block_dim, cfg);
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::uint64_t key : lsh.band_keys(lsh.signature(blocks[i]))) buckets[key].push_back(i);
        }
        std::set<std::pair<std::size_t, std::size_t>> candidates;
        for (const auto& [key, members] : buckets) {
            for (std::size_t x = 0; x < members.size(); ++x) {
                for (std::size_t y = x + 1; y < members.size(); ++y) {
                    const auto& a = blocks[members[x]];
                    const auto& b = blocks[members[y]];
                    if (a.rows == b.rows && a.cols == b.cols) {
                        candidates.emplace(members[x], members[y]);
                    }
                }
            }
        }
        result.candidate_pairs = candidates.size();
        for (const auto& [i, j] : candidates) {
            if (mean_squared_distance(blocks[i], blocks[j]) <= cfg.threshold_t) {
                ++result.verified_pairs;
                sets.unite(i, j);
            }
        }
    }

    result.cluster_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.cluster_of[i] = sets.find(i);
    return result;
}

}  // namespace blockformer::storage
