#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>

#include "blockformer/tensor/kernels.hpp"
#include "blockformer/tensor/ops.hpp"
#include "blockformer/tensor/parallel.hpp"
#include "test_util.hpp"

namespace blockformer {
namespace {

using testing::random_dense;

template <typename T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

TEST(Kernels, ScalarAlwaysAvailableAndFirst) {
    const auto all = kernels::available();
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(all.front()->name, "scalar");
}

TEST(Kernels, ScopedOverrideRestores) {
    const auto* before = &kernels::active();
    {
        kernels::ScopedKernels guard(kernels::scalar());
        EXPECT_EQ(&kernels::active(), &kernels::scalar());
    }
    EXPECT_EQ(&kernels::active(), before);
}

// Every backend must agree with the scalar table bit for bit, including odd lengths.
TEST(Kernels, BackendsBitExactWithScalar) {
    const auto& ref = kernels::scalar();
    for (const auto* k : kernels::available()) {
        SCOPED_TRACE(std::string(k->name));
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t m = 1 + rng.next_u64() % 17, kk = 1 + rng.next_u64() % 19, n = 1 + rng.next_u64() % 23;
            const auto a = random_dense(m, kk, 10 + trial, -4.0f, 4.0f).data;
            const auto b = random_dense(kk, n, 20 + trial, -4.0f, 4.0f).data;
            std::vector<double> acc_ref(m * n, 0.25), acc(m * n, 0.25);
            ref.matmul_accumulate(a.data(), b.data(), acc_ref.data(), m, kk, n);
            k->matmul_accumulate(a.data(), b.data(), acc.data(), m, kk, n);
            EXPECT_TRUE(same_bits(acc_ref, acc));

            const std::size_t len = a.size();
            const auto a2 = random_dense(1, len, 30 + trial, -100.0f, 100.0f).data;
            std::vector<float> r1(len), r2(len);
            ref.add(a.data(), a2.data(), r1.data(), len);
            k->add(a.data(), a2.data(), r2.data(), len);
            EXPECT_TRUE(same_bits(r1, r2));
            ref.scale(a2.data(), 0.37f, r1.data(), len);
            k->scale(a2.data(), 0.37f, r2.data(), len);
            EXPECT_TRUE(same_bits(r1, r2));
            ref.add_scalar(a2.data(), -1.5f, r1.data(), len);
            k->add_scalar(a2.data(), -1.5f, r2.data(), len);
            EXPECT_TRUE(same_bits(r1, r2));
            ref.relu(a2.data(), r1.data(), len);
            k->relu(a2.data(), r2.data(), len);
            EXPECT_TRUE(same_bits(r1, r2));
            ref.narrow(acc_ref.data(), r1.data(), std::min(len, acc_ref.size()));
            k->narrow(acc_ref.data(), r2.data(), std::min(len, acc_ref.size()));
            EXPECT_TRUE(same_bits(r1, r2));
        }
    }
}

TEST(Kernels, ReluMapsNegativeZeroToPositiveZero) {
    for (const auto* k : kernels::available()) {
        std::vector<float> in{-0.0f, -1.0f, 3.0f, -0.0f, 0.5f, -2.0f, 1.0f, -0.0f, 4.0f};
        std::vector<float> out(in.size());
        k->relu(in.data(), out.data(), in.size());
        for (float v : out) EXPECT_FALSE(std::signbit(v)) << k->name;
    }
}

TEST(Kernels, BlockedOpsIdenticalUnderEveryBackend) {
    const auto a = partition(random_dense(37, 29, 1), 8);
    const auto b = partition(random_dense(29, 41, 2), 8);
    BlockedMatrix ref;
    {
        kernels::ScopedKernels guard(kernels::scalar());
        ref = block_matmul(a, b);
    }
    for (const auto* k : kernels::available()) {
        kernels::ScopedKernels guard(*k);
        EXPECT_TRUE(bit_equal(block_matmul(a, b), ref)) << k->name;
    }
}

TEST(Parallel, CoversEveryIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 1);
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Parallel, RethrowsTaskException) {
    EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                     if (i == 57) throw std::runtime_error("boom");
                 }, 1),
                 std::runtime_error);
}

TEST(Parallel, ThreadCountIndependence) {
    const auto a = partition(random_dense(64, 64, 3), 4);
    const auto b = partition(random_dense(64, 64, 4), 4);
    ::setenv("BLOCKFORMER_THREADS", "1", 1);
    const auto one = block_matmul(a, b);
    ::setenv("BLOCKFORMER_THREADS", "4", 1);
    const auto four = block_matmul(a, b);
    ::unsetenv("BLOCKFORMER_THREADS");
    EXPECT_TRUE(bit_equal(one, four));
}

}  // namespace
}  // namespace blockformer
