// AArch64 Advanced SIMD backend. Only built on aarch64 targets.

#include <arm_neon.h>

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
            const float64x2_t av = vdupq_n_f64(as);
            const float* brow = b + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const float32x4_t bv = vld1q_f32(brow + j);
                const float64x2_t lo = vcvt_f64_f32(vget_low_f32(bv));
                const float64x2_t hi = vcvt_high_f64_f32(bv);
                vst1q_f64(out + j, vfmaq_f64(vld1q_f64(out + j), av, lo));
                vst1q_f64(out + j + 2, vfmaq_f64(vld1q_f64(out + j + 2), av, hi));
            }
            for (; j < n; ++j) out[j] += as * static_cast<double>(brow[j]);
        }
    }
}

void add(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(const float* a, float c, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_n_f32(vld1q_f32(a + i), c));
    for (; i < n; ++i) out[i] = a[i] * c;
}

void add_scalar(const float* a, float c, float* out, std::size_t n) {
    const float32x4_t cv = vdupq_n_f32(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), cv));
    for (; i < n; ++i) out[i] = a[i] + c;
}

void relu(const float* a, float* out, std::size_t n) {
    // Select on x > 0 rather than vmaxq, which would keep -0.0.
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t x = vld1q_f32(a + i);
        vst1q_f32(out + i, vbslq_f32(vcgtq_f32(x, zero), x, zero));
    }
    for (; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}

void narrow(const double* in, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x2_t lo = vcvt_f32_f64(vld1q_f64(in + i));
        vst1q_f32(out + i, vcvt_high_f32_f64(lo, vld1q_f64(in + i + 2)));
    }
    for (; i < n; ++i) out[i] = static_cast<float>(in[i]);
}

}  // namespace

const KernelSet kNeonKernels{"neon", matmul_accumulate, add, scale, add_scalar, relu, narrow};

}  // namespace blockformer::kernels::detail
