#pragma once

// Dense reference implementations. Written against DenseMatrix only and
// sharing no kernel code with tensor/, so agreement between the two is
// evidence rather than tautology. Single-threaded, fixed loop order, double
// accumulation everywhere; each function rounds to float once on output.

#include <optional>
#include <span>
#include <vector>

#include "blockformer/common/dense_matrix.hpp"
#include "blockformer/model/config.hpp"

namespace blockformer::oracle {

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_transpose(const DenseMatrix& a);
DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_relu(const DenseMatrix& a);
DenseMatrix dense_exp(const DenseMatrix& a);
DenseMatrix dense_scale(const DenseMatrix& a, double c);
DenseMatrix dense_add_bias(const DenseMatrix& a, std::span<const float> bias);
/// Row-wise softmax with max subtraction.
DenseMatrix dense_softmax(const DenseMatrix& a);
/// Row-wise (x - mean) / sqrt(var + eps), population variance.
DenseMatrix dense_layer_norm(const DenseMatrix& a, double eps);
/// softmax(q k^T / sqrt(head_dim)) v for one head.
DenseMatrix dense_attention(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v);

struct DenseBlockWeights {
    DenseMatrix wq, wk, wv;
    std::optional<DenseMatrix> wo;
    DenseMatrix w0;
    std::vector<float> b0;
    DenseMatrix w1;
    std::vector<float> b1;
};

struct DenseWeights {
    std::vector<DenseBlockWeights> blocks;
};

DenseMatrix dense_mha(const DenseMatrix& x, const DenseBlockWeights& w, const ModelConfig& cfg);
DenseMatrix dense_ffn(const DenseMatrix& x, const DenseBlockWeights& w, const ModelConfig& cfg);
DenseMatrix dense_encoder_block(const DenseMatrix& x, const DenseBlockWeights& w,
                                const ModelConfig& cfg);
/// Applies cfg.n_blocks encoder blocks to every batch item.
std::vector<DenseMatrix> dense_encoder_forward(const std::vector<DenseMatrix>& batch,
                                               const DenseWeights& w, const ModelConfig& cfg);

struct CompareMetrics {
    double max_abs = 0.0;
    double max_rel = 0.0;
    double mean_abs = 0.0;
};

/// Relative error uses max(|a|, |b|, 1e-12) as denominator.
CompareMetrics compare(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace blockformer::oracle
