#include <cstddef>

#include "blockformer/tensor/kernels.hpp"

namespace blockformer::kernels {

namespace {

void matmul_accumulate(const float* a, const float* b, double* acc, std::size_t m, std::size_t k,
                       std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* out = acc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const float* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) out[j] += av * static_cast<double>(brow[j]);
        }
    }
}

void add(const float* a, const float* b, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(const float* a, float c, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * c;
}

void add_scalar(const float* a, float c, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + c;
}

void relu(const float* a, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}

void narrow(const double* in, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(in[i]);
}

const KernelSet kScalarKernels{"scalar", matmul_accumulate, add, scale, add_scalar, relu, narrow};

}  // namespace

const KernelSet& scalar() { return kScalarKernels; }

}  // namespace blockformer::kernels
