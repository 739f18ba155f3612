#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blockformer/common/error.hpp"
#include "blockformer/oracle/dense_ops.hpp"
#include "blockformer/pipeline/pipeline.hpp"
#include "blockformer/tensor/ops.hpp"
#include "test_util.hpp"

namespace blockformer::pipeline {
namespace {

using blockformer::testing::max_abs_diff;
using blockformer::testing::random_dense;

DenseMatrix row(std::vector<float> v) {
    const std::size_t n = v.size();
    return DenseMatrix(1, n, std::move(v));
}

TEST(Softmax, UniformRow) {
    const auto s = reassemble(softmax_two_phase(partition(row({1, 1, 1, 1}), 3)));
    for (float v : s.data) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(Softmax, LnTwoRow) {
    const auto s = reassemble(softmax_two_phase(partition(row({0.0f, float(std::numbers::ln2)}), 1)));
    EXPECT_NEAR(s.data[0], 1.0 / 3.0, 1e-6);
    EXPECT_NEAR(s.data[1], 2.0 / 3.0, 1e-6);
}

TEST(Softmax, MatchesDenseOracle) {
    const auto d = random_dense(10, 10, 3, -4.0f, 4.0f);
    const auto s = reassemble(softmax_two_phase(partition(d, 4)));
    EXPECT_LE(max_abs_diff(s, oracle::dense_softmax(d)), 1e-6);
}

TEST(Softmax, TwoStagesComposeToOnePass) {
    const auto a = partition(random_dense(9, 13, 4, -6.0f, 6.0f), 4);
    EXPECT_TRUE(bit_equal(softmax_aggregate_divide(softmax_exp_scan(a)), softmax_two_phase(a)));
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
    const auto s = reassemble(softmax_two_phase(partition(row({1000.0f, 999.0f, -1000.0f}), 2)));
    for (float v : s.data) EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(s.data[0] + s.data[1] + s.data[2], 1.0, 1e-6);
}

TEST(Softmax, RowsStochasticMonotoneShiftInvariant) {
    const auto d = random_dense(50, 37, 5, -10.0f, 10.0f);
    const auto s = reassemble(softmax_two_phase(partition(d, 8)));
    auto shifted = d;
    for (auto& v : shifted.data) v += 3.5f;
    const auto s2 = reassemble(softmax_two_phase(partition(shifted, 8)));
    EXPECT_LE(max_abs_diff(s, s2), 1e-6);
    for (std::size_t i = 0; i < d.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d.cols; ++j) {
            EXPECT_GT(s(i, j), 0.0f);
            EXPECT_LE(s(i, j), 1.0f);
            sum += s(i, j);
            for (std::size_t k = 0; k < d.cols; ++k) {
                if (d(i, j) > d(i, k)) EXPECT_GE(s(i, j), s(i, k));
            }
        }
        EXPECT_NEAR(sum, 1.0, 1e-5);
    }
}

TEST(LayerNorm, ConstantRowIsZero) {
    const auto out = reassemble(layer_norm(partition(row({5, 5, 5}), 2), 1e-5f));
    for (float v : out.data) EXPECT_EQ(v, 0.0f);
}

TEST(LayerNorm, OneTwoThreeWithoutEps) {
    const auto out = reassemble(layer_norm(partition(row({1, 2, 3}), 2), 0.0f));
    EXPECT_NEAR(out.data[0], -std::sqrt(1.5), 1e-6);
    EXPECT_NEAR(out.data[1], 0.0, 1e-6);
    EXPECT_NEAR(out.data[2], std::sqrt(1.5), 1e-6);
}

TEST(LayerNorm, RowStatistics) {
    const auto d = random_dense(10, 64, 6, -2.0f, 2.0f);
    const auto out = reassemble(layer_norm(partition(d, 8), 1e-5f));
    for (std::size_t i = 0; i < out.rows; ++i) {
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < out.cols; ++j) mean += out(i, j);
        mean /= out.cols;
        for (std::size_t j = 0; j < out.cols; ++j) var += (out(i, j) - mean) * (out(i, j) - mean);
        var /= out.cols;
        EXPECT_LE(std::abs(mean), 1e-6);
        EXPECT_GE(var, 1.0 - 1e-3);
        EXPECT_LE(var, 1.0);
    }
}

TEST(LayerNorm, MatchesOracleAndIsNearlyIdempotent) {
    const auto d = random_dense(10, 64, 7, -3.0f, 3.0f);
    const auto once = layer_norm(partition(d, 8), 1e-5f);
    EXPECT_LE(max_abs_diff(reassemble(once), oracle::dense_layer_norm(d, 1e-5)), 1e-5);
    EXPECT_LE(max_abs_diff(reassemble(layer_norm(once, 1e-5f)), reassemble(once)), 1e-3);
}

TEST(AggregateRows, SumsAcrossTiles) {
    const auto d = random_dense(5, 11, 8);
    const auto sums = aggregate_rows(partition(d, 3), 0.0, [](double acc, float v) { return acc + v; });
    ASSERT_EQ(sums.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 11; ++j) s += d(i, j);
        EXPECT_NEAR(sums[i], s, 1e-12);
    }
}

TEST(ResidualAdd, Cases) {
    const auto x = TensorSet::of("x", partition(random_dense(10, 64, 9), 8));
    const auto zero = TensorSet::of("zero", BlockedMatrix::zeros(10, 64, 8));
    std::vector<StageTrace> trace;
    EXPECT_TRUE(bit_equal(residual_add(x, zero, "y", &trace).matrix(), x.matrix()));
    ASSERT_EQ(trace.size(), 1u);
    EXPECT_EQ(trace[0].output_set, "y");
    const auto twice = residual_add(x, x, "2x");
    EXPECT_TRUE(bit_equal(twice.matrix(), elementwise_map(x.matrix(), ElementwiseFn::scale(2.0f))));
    const auto other = random_dense(10, 64, 10);
    const auto sum = residual_add(x, TensorSet::of("o", partition(other, 8)), "s");
    EXPECT_LE(max_abs_diff(reassemble(sum.matrix()), oracle::dense_add(reassemble(x.matrix()), other)), 1e-6);
    EXPECT_THROW(residual_add(x, TensorSet::of("bad", BlockedMatrix::zeros(10, 63, 8)), "z"), ShapeError);
}

TEST(Materialize, RoundTripIsBitIdentical) {
    storage::MemorySetStore store;
    auto s = TensorSet::of("acts", partition(random_dense(10, 64, 11), 8));
    std::vector<StageTrace> trace;
    const auto m = materialize(s, &store, ExecutionMode::kMaterialize, &trace);
    EXPECT_TRUE(m.materialized);
    EXPECT_TRUE(store.contains("acts"));
    EXPECT_TRUE(bit_equal(store.read("acts"), s.value));
    EXPECT_TRUE(bit_equal(m.value, s.value));
    ASSERT_EQ(trace.size(), 1u);
    EXPECT_TRUE(trace[0].materialized);
}

TEST(Materialize, MemoryModeIsTracedNoOp) {
    auto s = TensorSet::of("acts", partition(random_dense(4, 4, 12), 2));
    std::vector<StageTrace> trace;
    const auto m = materialize(s, nullptr, ExecutionMode::kMemory, &trace);
    EXPECT_FALSE(m.materialized);
    EXPECT_TRUE(bit_equal(m.value, s.value));
    EXPECT_EQ(trace.size(), 1u);
}

TEST(Materialize, DuplicateNameCollides) {
    storage::MemorySetStore store;
    auto s = TensorSet::of("acts", partition(random_dense(4, 4, 13), 2));
    materialize(s, &store, ExecutionMode::kMaterialize);
    EXPECT_THROW(materialize(s, &store, ExecutionMode::kMaterialize), NameCollisionError);
}

TEST(Materialize, StoreFullIsStageFailure) {
    storage::MemorySetStore store(64);
    auto s = TensorSet::of("acts", partition(random_dense(10, 64, 14), 8));
    try {
        materialize(s, &store, ExecutionMode::kMaterialize);
        FAIL() << "expected stage failure";
    } catch (const StageFailureError& e) {
        EXPECT_EQ(e.stage(), "materialize:acts");
    }
}

TEST(Materialize, DirectoryStoreRoundTrip) {
    blockformer::testing::TempDir dir("sets");
    storage::DirectorySetStore store(dir.path());
    BatchedTensor t({partition(random_dense(10, 64, 15), 8), partition(random_dense(10, 64, 16), 8)});
    store.write("block0.q", t);
    EXPECT_TRUE(store.contains("block0.q"));
    EXPECT_TRUE(bit_equal(store.read("block0.q"), t));
    EXPECT_THROW(store.read("missing"), IoError);
}

TEST(RunPipeline, SingleReluStageEqualsKernel) {
    const auto x = partition(random_dense(10, 64, 17), 8);
    const std::vector<Stage> stages{
        map_stage("relu", "x", "y", [](const BlockedMatrix& m) { return elementwise_map(m, ElementwiseFn::relu()); })};
    const auto r = run_pipeline(stages, {TensorSet::of("x", x)}, ExecutionMode::kMemory);
    EXPECT_TRUE(bit_equal(r.output.matrix(), elementwise_map(x, ElementwiseFn::relu())));
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace[0].stage_name, "relu");
    EXPECT_EQ(r.trace[0].input_sets, std::vector<std::string>{"x"});
    EXPECT_EQ(r.trace[0].blocks_processed, x.block_count());
    EXPECT_GE(r.trace[0].wall_time.count(), 0);
}

TEST(RunPipeline, UndeclaredInputRunsNothing) {
    int runs = 0;
    const std::vector<Stage> stages{
        map_stage("a", "x", "y", [&](const BlockedMatrix& m) { ++runs; return m; }),
        map_stage("b", "nope", "z", [&](const BlockedMatrix& m) { ++runs; return m; })};
    EXPECT_THROW(run_pipeline(stages, {TensorSet::of("x", BlockedMatrix::zeros(2, 2, 2))}, ExecutionMode::kMemory),
                 WiringError);
    EXPECT_EQ(runs, 0);
}

TEST(RunPipeline, ReusedOutputNameCollides) {
    const std::vector<Stage> stages{map_stage("a", "x", "x", [](const BlockedMatrix& m) { return m; })};
    EXPECT_THROW(run_pipeline(stages, {TensorSet::of("x", BlockedMatrix::zeros(2, 2, 2))}, ExecutionMode::kMemory),
                 NameCollisionError);
}

TEST(RunPipeline, MaterializeModeMatchesMemoryAndHitsStore) {
    const auto x = partition(random_dense(9, 12, 18, -3.0f, 3.0f), 4);
    const std::vector<Stage> stages{
        map_stage("exp_scan", "x", "e", softmax_exp_scan),
        map_stage("aggregate_divide", "e", "p", softmax_aggregate_divide),
        zip_stage("join", "p", "x", "r", elementwise_add),
        map_stage("norm", "r", "n", [](const BlockedMatrix& m) { return layer_norm(m, 1e-5f); })};
    const auto mem = run_pipeline(stages, {TensorSet::of("x", x)}, ExecutionMode::kMemory);
    storage::MemorySetStore store;
    const auto mat = run_pipeline(stages, {TensorSet::of("x", x)}, ExecutionMode::kMaterialize, &store);
    EXPECT_TRUE(bit_equal(mem.output.value, mat.output.value));
    for (const char* name : {"e", "p", "r", "n"}) EXPECT_TRUE(store.contains(name)) << name;
    EXPECT_EQ(mat.trace.size(), stages.size());
    for (const auto& t : mat.trace) EXPECT_TRUE(t.materialized);
    EXPECT_THROW(run_pipeline(stages, {TensorSet::of("x", x)}, ExecutionMode::kMaterialize, nullptr),
                 InvalidArgumentError);
}

TEST(RunPipeline, StoreFullInsideStageCarriesStageName) {
    storage::MemorySetStore store(200);
    const std::vector<Stage> stages{map_stage("copy", "x", "y", [](const BlockedMatrix& m) { return m; })};
    try {
        run_pipeline(stages, {TensorSet::of("x", partition(random_dense(10, 64, 19), 8))},
                     ExecutionMode::kMaterialize, &store);
        FAIL();
    } catch (const StageFailureError& e) {
        EXPECT_EQ(e.stage(), "copy");
    }
}

}  // namespace
}  // namespace blockformer::pipeline
