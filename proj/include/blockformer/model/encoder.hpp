#pragma once

#include <span>
#include <string>
#include <vector>

#include "blockformer/model/config.hpp"
#include "blockformer/model/weights.hpp"
#include "blockformer/pipeline/pipeline.hpp"

namespace blockformer {

/// Column slices [h * head_dim, (h + 1) * head_dim), one per head.
std::vector<BlockedMatrix> split_heads(const BlockedMatrix& x, std::size_t heads);

/// Column concatenation of the heads, then x Wo when wo is given.
BlockedMatrix unify_heads(std::span<const BlockedMatrix> heads, const BlockedMatrix* wo = nullptr);

/// 1 / sqrt(head_dim), rounded to float.
float attention_scale(std::size_t head_dim);

/// softmax(q k^T * attention_scale(head_dim)), row-stochastic.
BlockedMatrix attention_probabilities(const BlockedMatrix& q, const BlockedMatrix& k);

/// attention_probabilities(q, k) v. No mask: every position sees every other.
BlockedMatrix scaled_dot_product_attention(const BlockedMatrix& q, const BlockedMatrix& k,
                                           const BlockedMatrix& v);

BlockedMatrix multi_head_attention(const BlockedMatrix& x, const BlockWeights& w,
                                   const ModelConfig& cfg);

/// relu(x w0 + b0) w1 + b1, with a final relu when cfg.final_ffn_relu.
BlockedMatrix feed_forward(const BlockedMatrix& x, const BlockWeights& w, const ModelConfig& cfg);

/// Pre-norm block: u = x + MHA(LN(x)); y = u + FFN(LN(u)).
/// With cfg.netsdb_dataflow: n = LN(MHA(x)); y = n + FFN(n).
/// Dropout is the identity at inference.
BlockedMatrix encoder_block_forward(const BlockedMatrix& x, const BlockWeights& w,
                                    const ModelConfig& cfg);

/// Stage list for encoder block `block`, reading set `input` and the
/// "block<i>.<role>" weight sets. Sets `output` to the name of the final set.
std::vector<pipeline::Stage> encoder_block_stages(const ModelConfig& cfg, std::size_t block,
                                                  const std::string& input, std::string& output);

struct ForwardResult {
    BatchedTensor output;
    std::vector<pipeline::StageTrace> trace;
};

/// Runs cfg.n_blocks encoder blocks over every batch item as one relational
/// pipeline. Memory and materialize modes give bit-identical output.
/// Weight sets in pipeline form, built once and reused across forward calls.
struct PreparedWeights {
    std::vector<pipeline::TensorSet> sets;
};

PreparedWeights prepare_weights(const EncoderWeights& w, const ModelConfig& cfg);

ForwardResult model_forward(const BatchedTensor& x, const EncoderWeights& w, const ModelConfig& cfg,
                            pipeline::ExecutionMode mode = pipeline::ExecutionMode::kMemory,
                            storage::SetStore* store = nullptr);

ForwardResult model_forward(const BatchedTensor& x, const PreparedWeights& w, const ModelConfig& cfg,
                            pipeline::ExecutionMode mode = pipeline::ExecutionMode::kMemory,
                            storage::SetStore* store = nullptr);

/// Partitions B dense seq_len x embed_dim matrices with cfg.block_dim.
BatchedTensor make_batch(std::span<const DenseMatrix> items, const ModelConfig& cfg);

}  // namespace blockformer
