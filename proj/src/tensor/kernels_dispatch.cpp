#include <atomic>
#include <cstdlib>
#include <string_view>

#include "blockformer/tensor/kernels.hpp"
#include "kernels_backends.hpp"

namespace blockformer::kernels {

namespace {

std::atomic<const KernelSet*> g_override{nullptr};

const KernelSet& detect() {
    const char* env = std::getenv("BLOCKFORMER_KERNELS");
    const std::string_view want = env ? env : "auto";
    if (want == "scalar") return scalar();
    if (want == "avx2" && avx2()) return *avx2();
    if (want == "neon" && neon()) return *neon();
    if (const KernelSet* k = avx2()) return *k;
    if (const KernelSet* k = neon()) return *k;
    return scalar();
}

}  // namespace

const KernelSet* avx2() {
#if defined(BLOCKFORMER_HAVE_AVX2_KERNELS)
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::kAvx2Kernels : nullptr;
#else
    return nullptr;
#endif
}

const KernelSet* neon() {
#if defined(BLOCKFORMER_HAVE_NEON_KERNELS)
    // Advanced SIMD is mandatory on AArch64.
    return &detail::kNeonKernels;
#else
    return nullptr;
#endif
}

std::vector<const KernelSet*> available() {
    std::vector<const KernelSet*> out{&scalar()};
    if (const KernelSet* k = avx2()) out.push_back(k);
    if (const KernelSet* k = neon()) out.push_back(k);
    return out;
}

const KernelSet& active() {
    if (const KernelSet* k = g_override.load(std::memory_order_acquire)) return *k;
    static const KernelSet& detected = detect();
    return detected;
}

void set_active(const KernelSet* kernels) { g_override.store(kernels, std::memory_order_release); }

ScopedKernels::ScopedKernels(const KernelSet& k)
    : previous_(g_override.exchange(&k, std::memory_order_acq_rel)) {}

ScopedKernels::~ScopedKernels() { g_override.store(previous_, std::memory_order_release); }

}  // namespace blockformer::kernels
