// Compiled with -mavx2 -mfma; selected at runtime only when the CPU reports both.

#include <immintrin.h>

#include <cstddef>

#include "kernels_backends.hpp"

namespace blockformer::kernels::detail {

namespace {

void matmul_accumulate(const float* a, const float* b, double* acc, std::size_t m, std::size_t k,
                       std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* out = acc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double as = a[i * k + p];
            const __m256d av = _mm256_set1_pd(as);
            const float* brow = b + p * n;
            std::size_t j = 0;
            // Product of two floats is exact in double, so fmadd rounds like mul+add.
            for (; j + 8 <= n; j += 8) {
                const __m256 bv = _mm256_loadu_ps(brow + j);
                const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(bv));
                const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1));
                _mm256_storeu_pd(out + j, _mm256_fmadd_pd(av, lo, _mm256_loadu_pd(out + j)));
                _mm256_storeu_pd(out + j + 4,
                                 _mm256_fmadd_pd(av, hi, _mm256_loadu_pd(out + j + 4)));
            }
            for (; j + 4 <= n; j += 4) {
                const __m256d bv = _mm256_cvtps_pd(_mm_loadu_ps(brow + j));
                _mm256_storeu_pd(out + j, _mm256_fmadd_pd(av, bv, _mm256_loadu_pd(out + j)));
            }
            for (; j < n; ++j) out[j] += as * static_cast<double>(brow[j]);
        }
    }
}

void add(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(const float* a, float c, float* out, std::size_t n) {
    const __m256 cv = _mm256_set1_ps(c);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), cv));
    for (; i < n; ++i) out[i] = a[i] * c;
}

void add_scalar(const float* a, float c, float* out, std::size_t n) {
    const __m256 cv = _mm256_set1_ps(c);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), cv));
    for (; i < n; ++i) out[i] = a[i] + c;
}

void relu(const float* a, float* out, std::size_t n) {
    // max_ps(x, 0) returns the second operand unless x > 0, matching the scalar
    // rule for -0.0 as well.
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(a + i), zero));
    for (; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}

void narrow(const double* in, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm_storeu_ps(out + i, _mm256_cvtpd_ps(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = static_cast<float>(in[i]);
}

}  // namespace

const KernelSet kAvx2Kernels{"avx2", matmul_accumulate, add, scale, add_scalar, relu, narrow};

}  // namespace blockformer::kernels::detail
