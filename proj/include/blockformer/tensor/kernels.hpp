#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace blockformer::kernels {

/// Tile-level arithmetic kernels. Every backend must produce results
/// bit-identical to the scalar table: float products are widened to double
/// before accumulation (exact), and per-element summation order over the
/// inner dimension is fixed, so vectorizing across output columns preserves
/// rounding.
struct KernelSet {
    std::string_view name;

    /// acc[m x n] += a[m x k] * b[k x n], all row-major and densely packed.
    void (*matmul_accumulate)(const float* a, const float* b, double* acc, std::size_t m,
                              std::size_t k, std::size_t n);
    /// out[i] = a[i] + b[i]
    void (*add)(const float* a, const float* b, float* out, std::size_t n);
    /// out[i] = a[i] * c
    void (*scale)(const float* a, float c, float* out, std::size_t n);
    /// out[i] = a[i] + c
    void (*add_scalar)(const float* a, float c, float* out, std::size_t n);
    /// out[i] = a[i] > 0 ? a[i] : +0
    void (*relu)(const float* a, float* out, std::size_t n);
    /// out[i] = float(in[i])
    void (*narrow)(const double* in, float* out, std::size_t n);
};

const KernelSet& scalar();
/// nullptr unless compiled in and supported by the running CPU.
const KernelSet* avx2();
const KernelSet* neon();

/// Every backend usable on this machine, scalar first.
std::vector<const KernelSet*> available();

/// The table the blocked operators use. Chosen once from BLOCKFORMER_KERNELS
/// (scalar|avx2|neon|auto) and CPU detection, unless overridden.
const KernelSet& active();

/// Override the active table; nullptr restores automatic selection.
void set_active(const KernelSet* kernels);

/// RAII override used by equivalence tests.
class ScopedKernels {
public:
    explicit ScopedKernels(const KernelSet& k);
    ~ScopedKernels();
    ScopedKernels(const ScopedKernels&) = delete;
    ScopedKernels& operator=(const ScopedKernels&) = delete;

private:
    const KernelSet* previous_;
};

}  // namespace blockformer::kernels
