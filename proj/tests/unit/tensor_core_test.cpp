#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blockformer/common/error.hpp"
#include "blockformer/oracle/dense_ops.hpp"
#include "blockformer/tensor/ops.hpp"
#include "test_util.hpp"

namespace blockformer {
namespace {

using testing::max_abs_diff;
using testing::random_dense;

DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

TEST(Partition, FourByFourIntoTwoByTwoTiles) {
    const auto m = partition(random_dense(4, 4, 1), 2);
    EXPECT_EQ(m.block_count(), 4u);
    for (const auto& [key, b] : m.blocks()) {
        EXPECT_EQ(b.rows, 2);
        EXPECT_EQ(b.cols, 2);
    }
}

TEST(Partition, RemainderTiles) {
    const auto m = partition(random_dense(5, 3, 2), 2);
    EXPECT_EQ(m.block_count(), 6u);
    const auto& corner = m.block(2, 1);
    EXPECT_EQ(corner.rows, 1);
    EXPECT_EQ(corner.cols, 1);
    EXPECT_EQ(m.block(0, 1).cols, 1);
    EXPECT_EQ(m.block(2, 0).rows, 1);
}

TEST(Partition, ElementPlacement) {
    const auto d = random_dense(7, 5, 3);
    const auto m = partition(d, 3);
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_EQ(m.block(i / 3, j / 3).at(i % 3, j % 3), d(i, j));
        }
    }
}

TEST(Partition, RejectsZeroDims) {
    EXPECT_THROW(partition(DenseMatrix(0, 3), 2), InvalidArgumentError);
    EXPECT_THROW(partition(DenseMatrix(3, 0), 2), InvalidArgumentError);
    EXPECT_THROW(partition(DenseMatrix(3, 3), 0), InvalidArgumentError);
}

TEST(Partition, RoundTripAcrossBlockDims) {
    std::uint64_t seed = 100;
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 7}, {10, 64}, {13, 5}, {64, 64}}) {
        const auto d = random_dense(r, c, seed++);
        for (std::size_t bd : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{8}, std::size_t{64},
                               std::max(r, c) + 1}) {
            EXPECT_TRUE(bit_equal(reassemble(partition(d, bd)), d)) << r << "x" << c << " bd=" << bd;
        }
    }
}

TEST(Reassemble, MissingBlockIsCorruption) {
    auto m = partition(random_dense(7, 7, 4), 3);
    m.erase({1, 1});
    EXPECT_THROW(reassemble(m), CorruptionError);
}

TEST(BlockedMatrix, PutRejectsMisfitTile) {
    BlockedMatrix m(5, 3, 2);
    EXPECT_THROW(m.put(TensorBlock({2, 1}, 2, 1)), ShapeError);
    EXPECT_THROW(m.put(TensorBlock({3, 0}, 1, 2)), ShapeError);
    EXPECT_NO_THROW(m.put(TensorBlock({2, 1}, 1, 1)));
}

TEST(BlockMatmul, IdentityKeepsMatrix) {
    const auto a = random_dense(10, 64, 5);
    const auto c = reassemble(block_matmul(partition(a, 8), partition(identity(64), 8)));
    EXPECT_LE(max_abs_diff(c, a), 1e-6);
}

TEST(BlockMatmul, MatchesDenseOracle) {
    const auto a = random_dense(10, 64, 42);
    const auto b = random_dense(64, 64, 43);
    const auto c = reassemble(block_matmul(partition(a, 8), partition(b, 8)));
    EXPECT_LE(max_abs_diff(c, oracle::dense_matmul(a, b)), 1e-5);
}

TEST(BlockMatmul, ZeroTimesAnythingIsZero) {
    const auto z = BlockedMatrix::zeros(6, 9, 4);
    const auto c = reassemble(block_matmul(z, partition(random_dense(9, 5, 6), 4)));
    EXPECT_EQ(c.rows, 6u);
    EXPECT_EQ(c.cols, 5u);
    for (float v : c.data) EXPECT_EQ(v, 0.0f);
}

TEST(BlockMatmul, ShapeMismatch) {
    EXPECT_THROW(block_matmul(BlockedMatrix::zeros(3, 4, 2), BlockedMatrix::zeros(5, 3, 2)), ShapeError);
    EXPECT_THROW(block_matmul(BlockedMatrix::zeros(3, 4, 2), BlockedMatrix::zeros(4, 3, 3)), ShapeError);
}

TEST(BlockMatmul, BlockDimIndependence) {
    const auto a = random_dense(33, 47, 7, -3.0f, 3.0f);
    const auto b = random_dense(47, 29, 8, -3.0f, 3.0f);
    const auto c4 = reassemble(block_matmul(partition(a, 4), partition(b, 4)));
    const auto c16 = reassemble(block_matmul(partition(a, 16), partition(b, 16)));
    EXPECT_LE(max_abs_diff(c4, c16), 1e-5);
}

TEST(BlockTranspose, Involution) {
    const auto a = partition(random_dense(9, 14, 9), 4);
    EXPECT_TRUE(bit_equal(block_transpose(block_transpose(a)), a));
}

TEST(BlockTranspose, SymmetricInputUnchanged) {
    auto d = random_dense(7, 7, 10);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i);
    EXPECT_TRUE(bit_equal(reassemble(block_transpose(partition(d, 3))), d));
}

TEST(BlockTranspose, MatchesOracleBitExact) {
    const auto d = random_dense(5, 3, 11);
    const auto t = block_transpose(partition(d, 2));
    EXPECT_EQ(t.rows(), 3u);
    EXPECT_EQ(t.cols(), 5u);
    EXPECT_TRUE(bit_equal(reassemble(t), oracle::dense_transpose(d)));
}

TEST(ElementwiseAdd, ZeroAndNegation) {
    const auto d = random_dense(10, 64, 12);
    const auto a = partition(d, 8);
    EXPECT_TRUE(bit_equal(elementwise_add(a, BlockedMatrix::zeros(10, 64, 8)), a));
    const auto neg = elementwise_map(a, ElementwiseFn::scale(-1.0f));
    for (float v : reassemble(elementwise_add(a, neg)).data) EXPECT_EQ(v, 0.0f);
}

TEST(ElementwiseAdd, MatchesOracle) {
    const auto a = random_dense(10, 64, 13);
    const auto b = random_dense(10, 64, 14);
    const auto c = reassemble(elementwise_add(partition(a, 8), partition(b, 8)));
    EXPECT_LE(max_abs_diff(c, oracle::dense_add(a, b)), 1e-6);
}

TEST(ElementwiseAdd, Mismatches) {
    EXPECT_THROW(elementwise_add(BlockedMatrix::zeros(3, 4, 2), BlockedMatrix::zeros(4, 3, 2)), ShapeError);
    EXPECT_THROW(elementwise_add(BlockedMatrix::zeros(4, 4, 2), BlockedMatrix::zeros(4, 4, 4)), ShapeError);
}

TEST(ElementwiseMap, Relu) {
    const auto out = reassemble(elementwise_map(partition(DenseMatrix(1, 3, {-1.0f, 0.0f, 2.0f}), 2),
                                                ElementwiseFn::relu()));
    EXPECT_EQ(out.data, (std::vector<float>{0.0f, 0.0f, 2.0f}));
    EXPECT_FALSE(std::signbit(out.data[0]));
}

TEST(ElementwiseMap, ScaleByOneIsIdentity) {
    const auto a = partition(random_dense(10, 64, 15), 8);
    EXPECT_TRUE(bit_equal(elementwise_map(a, ElementwiseFn::scale(1.0f)), a));
}

TEST(ElementwiseMap, ExpMatchesOracle) {
    const auto d = random_dense(10, 64, 16, -5.0f, 5.0f);
    const auto e = reassemble(elementwise_map(partition(d, 8), ElementwiseFn::exp()));
    const auto o = oracle::dense_exp(d);
    for (std::size_t i = 0; i < d.data.size(); ++i) {
        EXPECT_LE(std::abs(double(e.data[i]) - o.data[i]) / std::abs(double(o.data[i])), 1e-6);
    }
}

TEST(ElementwiseMap, AddConst) {
    const auto d = random_dense(3, 3, 17);
    const auto out = reassemble(elementwise_map(partition(d, 2), ElementwiseFn::add_const(0.5f)));
    for (std::size_t i = 0; i < d.data.size(); ++i) EXPECT_EQ(out.data[i], d.data[i] + 0.5f);
}

TEST(ElementwiseMap, OverflowNamesBlock) {
    DenseMatrix d(4, 4);
    d(3, 2) = 100.0f;
    try {
        elementwise_map(partition(d, 2), ElementwiseFn::exp());
        FAIL() << "expected overflow";
    } catch (const NumericOverflowError& e) {
        EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos) << e.what();
    }
}

TEST(BroadcastRowAdd, ZeroBiasIdentity) {
    const auto a = partition(random_dense(10, 64, 18), 8);
    const std::vector<float> zero(64, 0.0f);
    EXPECT_TRUE(bit_equal(broadcast_row_add(a, zero), a));
}

TEST(BroadcastRowAdd, SingleRowEqualsElementwiseAdd) {
    const auto row = random_dense(1, 20, 19);
    const auto bias = random_dense(1, 20, 20);
    EXPECT_TRUE(bit_equal(broadcast_row_add(partition(row, 8), bias.data),
                          elementwise_add(partition(row, 8), partition(bias, 8))));
}

TEST(BroadcastRowAdd, MatchesOracleAndChecksLength) {
    const auto a = random_dense(10, 64, 21);
    const auto bias = random_dense(1, 64, 22);
    const auto c = reassemble(broadcast_row_add(partition(a, 8), bias.data));
    EXPECT_LE(max_abs_diff(c, oracle::dense_add_bias(a, bias.data)), 1e-6);
    const std::vector<float> short_bias(63, 0.0f);
    EXPECT_THROW(broadcast_row_add(partition(a, 8), short_bias), ShapeError);
}

TEST(SliceConcat, InversePair) {
    const auto a = partition(random_dense(10, 64, 23), 8);
    std::vector<BlockedMatrix> parts;
    for (std::size_t h = 0; h < 4; ++h) parts.push_back(slice_columns(a, h * 16, 16));
    EXPECT_TRUE(bit_equal(concat_columns(parts), a));
}

TEST(SliceConcat, UnalignedSlices) {
    const auto d = random_dense(6, 11, 24);
    const auto s = reassemble(slice_columns(partition(d, 4), 3, 5));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(s(i, j), d(i, j + 3));
}

// Every kernel vs the dense oracle on random shapes and block dims.
TEST(BlockedDenseEquivalence, RandomShapes) {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 1 + rng.next_u64() % 64, k = 1 + rng.next_u64() % 64, n = 1 + rng.next_u64() % 64;
        const std::size_t bd = 1 + rng.next_u64() % 20;
        const auto a = random_dense(m, k, 1000 + trial);
        const auto b = random_dense(k, n, 2000 + trial);
        const auto a2 = random_dense(m, k, 3000 + trial);
        const auto pa = partition(a, bd);
        EXPECT_LE(max_abs_diff(reassemble(block_matmul(pa, partition(b, bd))), oracle::dense_matmul(a, b)), 1e-5);
        EXPECT_LE(max_abs_diff(reassemble(elementwise_add(pa, partition(a2, bd))), oracle::dense_add(a, a2)), 1e-5);
        EXPECT_LE(max_abs_diff(reassemble(elementwise_map(pa, ElementwiseFn::relu())), oracle::dense_relu(a)), 1e-5);
        EXPECT_LE(max_abs_diff(reassemble(elementwise_map(pa, ElementwiseFn::scale(0.3f))), oracle::dense_scale(a, 0.3f)),
                  1e-5);
        EXPECT_TRUE(bit_equal(reassemble(block_transpose(pa)), oracle::dense_transpose(a)));
    }
}

}  // namespace
}  // namespace blockformer
