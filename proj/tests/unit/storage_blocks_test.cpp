#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>

#include "blockformer/common/error.hpp"
#include "blockformer/storage/block_codec.hpp"
#include "blockformer/storage/fingerprint.hpp"
#include "blockformer/storage/lsh.hpp"
#include "blockformer/storage/near_duplicates.hpp"
#include "test_util.hpp"

namespace blockformer::storage {
namespace {

TensorBlock random_block(Rng& rng, std::uint16_t rows, std::uint16_t cols, BlockKey key = {}) {
    TensorBlock b(key, rows, cols);
    for (auto& v : b.data) v = rng.uniform(-1.0f, 1.0f);
    return b;
}

TensorBlock perturbed(const TensorBlock& b, Rng& rng, double rel) {
    TensorBlock p = b;
    for (auto& v : p.data) v = static_cast<float>(v * (1.0 + rel * (2.0 * rng.uniform01() - 1.0)));
    return p;
}

// O(n^2) reference: union every pair that is byte-equal or within the threshold.
std::vector<std::size_t> brute_force_clusters(const std::vector<TensorBlock>& blocks, double t) {
    const std::size_t n = blocks.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (blocks[i].rows != blocks[j].rows || blocks[i].cols != blocks[j].cols) continue;
            if (same_payload(blocks[i], blocks[j]) || (t > 0 && mean_squared_distance(blocks[i], blocks[j]) <= t)) {
                const auto a = find(i), b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = find(i);
    return out;
}

TEST(BlockCodec, OneByOneIs25Bytes) {
    TensorBlock b({3, 4}, 1, 1);
    b.data[0] = 1.5f;
    EXPECT_EQ(serialize_block(b).size(), 25u);
    EXPECT_EQ(serialized_block_size(1, 1), 25u);
    EXPECT_EQ(serialized_block_size(8, 8), 17u + 256u + 4u);
}

TEST(BlockCodec, LayoutIsLittleEndian) {
    TensorBlock b({0x01020304, 7}, 1, 2);
    b.data = {1.0f, -2.0f};
    const auto bytes = serialize_block(b);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TBLK");
    EXPECT_EQ(bytes[4], kBlockFormatVersion);
    EXPECT_EQ(bytes[5], 0x04);
    EXPECT_EQ(bytes[8], 0x01);
    EXPECT_EQ(bytes[13], 1);  // rows low byte
    EXPECT_EQ(bytes[15], 2);  // cols low byte
    std::uint32_t first;
    std::memcpy(&first, bytes.data() + 17, 4);
    EXPECT_EQ(first, std::bit_cast<std::uint32_t>(1.0f));
    const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 4);
    const std::uint32_t crc = crc32(body);
    EXPECT_EQ(bytes[bytes.size() - 4], crc & 0xffu);
}

TEST(BlockCodec, RandomRoundTrips) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto r = static_cast<std::uint16_t>(1 + rng.next_u64() % 16);
        const auto c = static_cast<std::uint16_t>(1 + rng.next_u64() % 16);
        const auto b = random_block(rng, r, c, {static_cast<std::uint32_t>(rng.next_u64()), static_cast<std::uint32_t>(i)});
        const auto bytes = serialize_block(b);
        std::size_t consumed = 0;
        EXPECT_TRUE(bit_equal(deserialize_block(bytes, &consumed), b));
        EXPECT_EQ(consumed, bytes.size());
    }
}

TEST(BlockCodec, DetectsCorruption) {
    Rng rng(2);
    const auto bytes = serialize_block(random_block(rng, 3, 3));
    auto crc_flip = bytes;
    crc_flip.back() ^= 0x01;
    EXPECT_THROW(deserialize_block(crc_flip), CorruptionError);
    auto payload_flip = bytes;
    payload_flip[20] ^= 0x80;
    EXPECT_THROW(deserialize_block(payload_flip), CorruptionError);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(deserialize_block(magic), CorruptionError);
    auto version = bytes;
    version[4] = 99;
    EXPECT_THROW(deserialize_block(version), CorruptionError);
    EXPECT_THROW(deserialize_block(std::span(bytes).first(bytes.size() - 1)), CorruptionError);
}

TEST(Fingerprint, EqualPayloadEqualHash) {
    Rng rng(3);
    auto a = random_block(rng, 8, 8, {0, 0});
    auto b = a;
    b.block_row = 5;
    EXPECT_EQ(fingerprint_block(a), fingerprint_block(b));
}

TEST(Fingerprint, OneUlpChangesHash) {
    Rng rng(4);
    int same = 0;
    for (int i = 0; i < 1000; ++i) {
        auto a = random_block(rng, 8, 8);
        auto b = a;
        const std::size_t at = rng.next_u64() % b.data.size();
        b.data[at] = std::nextafter(b.data[at], 2.0f);
        same += fingerprint_block(a) == fingerprint_block(b);
    }
    EXPECT_EQ(same, 0);
}

TEST(Fingerprint, StableValue) {
    // Pinned so a change of hash function (and of any persisted state) is noticed.
    TensorBlock b({0, 0}, 2, 2);
    b.data = {1.0f, 2.0f, 3.0f, 4.0f};
    const std::uint64_t h = fingerprint_block(b);
    EXPECT_EQ(h, fingerprint_block(b));
    TensorBlock shape_only({0, 0}, 1, 4);
    shape_only.data = b.data;
    EXPECT_NE(h, fingerprint_block(shape_only));
}

TEST(Lsh, ConfigValidation) {
    DedupConfig cfg;
    cfg.hyperplanes = 60;
    cfg.bands = 8;
    EXPECT_THROW(cfg.validate(), InvalidArgumentError);
    cfg = DedupConfig{};
    cfg.threshold_t = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgumentError);
}

TEST(Lsh, IdenticalAndNegatedBlocks) {
    Rng rng(5);
    const HyperplaneLsh lsh(8, DedupConfig{});
    const auto b = random_block(rng, 8, 8);
    auto same = b;
    same.block_col = 9;
    EXPECT_EQ(lsh.signature(b), lsh.signature(same));
    auto neg = b;
    for (auto& v : neg.data) v = -v;
    const auto s = lsh.signature(b), sn = lsh.signature(neg);
    ASSERT_EQ(s.bits, 64u);
    for (std::size_t i = 0; i < s.bits; ++i) EXPECT_NE(s.bit(i), sn.bit(i)) << i;
    EXPECT_EQ(lsh.band_keys(s).size(), 8u);
}

TEST(Lsh, RaggedTilesSupported) {
    Rng rng(6);
    const HyperplaneLsh lsh(8, DedupConfig{});
    const auto b = random_block(rng, 2, 8);
    EXPECT_EQ(lsh.signature(b), lsh.signature(b));
}

TEST(Lsh, NearDuplicateCollisionRate) {
    Rng rng(7);
    const HyperplaneLsh lsh(8, DedupConfig{});
    int collided = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        const auto b = random_block(rng, 8, 8);
        const auto p = perturbed(b, rng, 1e-3);
        const auto ka = lsh.band_keys(lsh.signature(b));
        const auto kb = lsh.band_keys(lsh.signature(p));
        bool hit = false;
        for (std::size_t band = 0; band < ka.size(); ++band) hit |= ka[band] == kb[band];
        collided += hit;
    }
    const double rate = double(collided) / trials;
    std::cout << "[measured] near-duplicate band collision rate: " << rate << "\n";
    ::testing::Test::RecordProperty("collision_rate", std::to_string(rate));
    EXPECT_GE(rate, 0.9);
}

TEST(NearDuplicates, IdenticalSetsPairUp) {
    Rng rng(8);
    std::vector<TensorBlock> blocks;
    for (int i = 0; i < 20; ++i) blocks.push_back(random_block(rng, 8, 8));
    for (int i = 0; i < 20; ++i) blocks.push_back(blocks[i]);
    const auto c = find_near_duplicates(blocks, DedupConfig{});
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(c.cluster_of[i + 20], i);
    EXPECT_EQ(c.cluster_count(), 20u);
}

TEST(NearDuplicates, DistinctBlocksExactOnly) {
    Rng rng(9);
    std::vector<TensorBlock> blocks;
    for (int i = 0; i < 50; ++i) blocks.push_back(random_block(rng, 8, 8));
    const auto c = find_near_duplicates(blocks, DedupConfig{});
    EXPECT_EQ(c.cluster_count(), 50u);
    for (const auto& cl : c.clusters()) EXPECT_EQ(cl.size(), 1u);
}

TEST(NearDuplicates, DifferentDimsNeverMerge) {
    std::vector<TensorBlock> blocks{TensorBlock({0, 0}, 1, 2), TensorBlock({0, 0}, 2, 1)};
    DedupConfig cfg;
    cfg.threshold_t = 1.0;
    EXPECT_EQ(find_near_duplicates(blocks, cfg).cluster_count(), 2u);
}

TEST(NearDuplicates, MatchesBruteForceWithPerturbedCopies) {
    Rng rng(10);
    std::vector<TensorBlock> blocks;
    for (int i = 0; i < 50; ++i) blocks.push_back(random_block(rng, 8, 8));
    for (int i = 0; i < 10; ++i) blocks.push_back(perturbed(blocks[i * 5], rng, 1e-3));
    DedupConfig cfg;
    cfg.threshold_t = 1e-6;
    const auto c = find_near_duplicates(blocks, cfg);
    EXPECT_EQ(c.cluster_of, brute_force_clusters(blocks, cfg.threshold_t));
    EXPECT_EQ(c.cluster_count(), 50u);
    EXPECT_GE(c.verified_pairs, 10u);
}

TEST(NearDuplicates, MatchesBruteForceOnRandomInstances) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TensorBlock> blocks;
        const std::size_t base = 20 + rng.next_u64() % 100;
        for (std::size_t i = 0; i < base; ++i) {
            const bool ragged = rng.uniform01() < 0.2;
            blocks.push_back(random_block(rng, ragged ? 3 : 8, 8));
        }
        const std::size_t extra = rng.next_u64() % 80;
        for (std::size_t i = 0; i < extra && blocks.size() < 200; ++i) {
            const auto& src = blocks[rng.next_u64() % blocks.size()];
            blocks.push_back(rng.uniform01() < 0.3 ? src : perturbed(src, rng, 1e-3 * rng.uniform01()));
        }
        DedupConfig cfg;
        cfg.threshold_t = trial % 4 == 0 ? 0.0 : 1e-6;
        cfg.seed = 100 + trial;
        EXPECT_EQ(find_near_duplicates(blocks, cfg).cluster_of, brute_force_clusters(blocks, cfg.threshold_t))
            << "trial " << trial;
    }
}

}  // namespace
}  // namespace blockformer::storage
