#include "blockformer/model/encoder.hpp"

#include <cmath>

#include "blockformer/common/error.hpp"
#include "blockformer/tensor/ops.hpp"

namespace blockformer {

namespace {

using pipeline::Stage;
using pipeline::TensorSet;

std::vector<float> row_vector(const BlockedMatrix& m) { return reassemble(m).data; }

BlockedMatrix add_bias(const BlockedMatrix& x, const BlockedMatrix& bias_row) {
    return broadcast_row_add(x, row_vector(bias_row));
}

/// B items -> B * heads items (item-major, then head).
Stage split_stage(std::string name, std::string input, std::string output, std::size_t heads) {
    return Stage{std::move(name), {std::move(input)}, std::move(output),
                 [heads](std::span<const TensorSet* const> in) {
                     BatchedTensor out;
                     for (const auto& m : in[0]->value.items) {
                         for (auto& h : split_heads(m, heads)) out.items.push_back(std::move(h));
                     }
                     return out;
                 },
                 {}};
}

/// B * heads items -> B items.
Stage unify_stage(std::string name, std::vector<std::string> inputs, std::string output,
                  std::size_t heads) {
    return Stage{std::move(name), std::move(inputs), std::move(output),
                 [heads](std::span<const TensorSet* const> in) {
                     const auto& items = in[0]->value.items;
                     const BlockedMatrix* wo = in.size() > 1 ? &in[1]->matrix() : nullptr;
                     if (items.size() % heads != 0) {
                         throw ShapeError("unify_heads: " + std::to_string(items.size()) +
                                          " head outputs for " + std::to_string(heads) + " heads");
                     }
                     BatchedTensor out;
                     for (std::size_t b = 0; b < items.size(); b += heads) {
                         out.items.push_back(unify_heads(std::span(items).subspan(b, heads), wo));
                     }
                     return out;
                 },
                 {}};
}

}  // namespace

std::vector<BlockedMatrix> split_heads(const BlockedMatrix& x, std::size_t heads) {
    if (heads == 0 || x.cols() % heads != 0) {
        throw ShapeError("split_heads: " + std::to_string(x.cols()) + " columns into " +
                         std::to_string(heads) + " heads");
    }
    const std::size_t hd = x.cols() / heads;
    std::vector<BlockedMatrix> out;
    out.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) out.push_back(slice_columns(x, h * hd, hd));
    return out;
}

BlockedMatrix unify_heads(std::span<const BlockedMatrix> heads, const BlockedMatrix* wo) {
    if (heads.empty()) throw ShapeError("unify_heads: no heads");
    for (const auto& h : heads) {
        if (h.rows() != heads.front().rows() || h.cols() != heads.front().cols()) {
            throw ShapeError("unify_heads: head outputs differ in shape");
        }
    }
    BlockedMatrix out = concat_columns(heads);
    return wo ? block_matmul(out, *wo) : out;
}

float attention_scale(std::size_t head_dim) {
    return static_cast<float>(1.0 / std::sqrt(static_cast<double>(head_dim)));
}

BlockedMatrix attention_probabilities(const BlockedMatrix& q, const BlockedMatrix& k) {
    if (q.cols() != k.cols() || q.block_dim() != k.block_dim()) {
        throw ShapeError("attention: q and k differ in head_dim or block_dim");
    }
    const BlockedMatrix scores = block_matmul(q, block_transpose(k));
    const BlockedMatrix scaled = elementwise_map(scores, ElementwiseFn::scale(attention_scale(q.cols())));
    return pipeline::softmax_two_phase(scaled);
}

BlockedMatrix scaled_dot_product_attention(const BlockedMatrix& q, const BlockedMatrix& k,
                                           const BlockedMatrix& v) {
    if (k.rows() != v.rows()) throw ShapeError("attention: k and v differ in sequence length");
    return block_matmul(attention_probabilities(q, k), v);
}

BlockedMatrix multi_head_attention(const BlockedMatrix& x, const BlockWeights& w,
                                   const ModelConfig& cfg) {
    const auto q = split_heads(block_matmul(x, w.wq), cfg.heads);
    const auto k = split_heads(block_matmul(x, w.wk), cfg.heads);
    const auto v = split_heads(block_matmul(x, w.wv), cfg.heads);
    std::vector<BlockedMatrix> heads;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        heads.push_back(scaled_dot_product_attention(q[h], k[h], v[h]));
    }
    const BlockedMatrix* wo = nullptr;
    if (cfg.use_output_projection) {
        if (!w.wo) throw ShapeError("multi_head_attention: output projection enabled but Wo missing");
        wo = &*w.wo;
    }
    return unify_heads(heads, wo);
}

BlockedMatrix feed_forward(const BlockedMatrix& x, const BlockWeights& w, const ModelConfig& cfg) {
    const BlockedMatrix h = elementwise_map(broadcast_row_add(block_matmul(x, w.w0), w.b0),
                                            ElementwiseFn::relu());
    BlockedMatrix out = broadcast_row_add(block_matmul(h, w.w1), w.b1);
    return cfg.final_ffn_relu ? elementwise_map(out, ElementwiseFn::relu()) : out;
}

BlockedMatrix encoder_block_forward(const BlockedMatrix& x, const BlockWeights& w,
                                    const ModelConfig& cfg) {
    if (cfg.netsdb_dataflow) {
        const BlockedMatrix n = pipeline::layer_norm(multi_head_attention(x, w, cfg), cfg.layernorm_eps);
        return elementwise_add(n, feed_forward(n, w, cfg));
    }
    const BlockedMatrix u =
        elementwise_add(x, multi_head_attention(pipeline::layer_norm(x, cfg.layernorm_eps), w, cfg));
    return elementwise_add(u, feed_forward(pipeline::layer_norm(u, cfg.layernorm_eps), w, cfg));
}

std::vector<Stage> encoder_block_stages(const ModelConfig& cfg, std::size_t block,
                                        const std::string& input, std::string& output) {
    using pipeline::map_stage;
    using pipeline::zip_stage;
    const std::string p = "block" + std::to_string(block) + ".";
    const float eps = cfg.layernorm_eps;
    const float scale = attention_scale(cfg.head_dim());
    const std::string dropout_note =
        "dropout p=" + std::to_string(cfg.dropout_p) + " is the identity at inference";
    auto matmul = [](const BlockedMatrix& a, const BlockedMatrix& b) { return block_matmul(a, b); };
    auto add = [](const BlockedMatrix& a, const BlockedMatrix& b) { return elementwise_add(a, b); };
    auto norm = [eps](const BlockedMatrix& a) { return pipeline::layer_norm(a, eps); };
    auto relu = [](const BlockedMatrix& a) { return elementwise_map(a, ElementwiseFn::relu()); };

    std::vector<Stage> s;
    // Attention sub-block.
    std::string attn_in = input;
    if (!cfg.netsdb_dataflow) {
        s.push_back(map_stage(p + "layer_norm_1", input, p + "ln1", norm));
        attn_in = p + "ln1";
    }
    s.push_back(zip_stage(p + "matmul_q", attn_in, p + "wq", p + "q", matmul));
    s.push_back(zip_stage(p + "matmul_k", attn_in, p + "wk", p + "k", matmul));
    s.push_back(zip_stage(p + "matmul_v", attn_in, p + "wv", p + "v", matmul));
    s.push_back(split_stage(p + "split_heads_q", p + "q", p + "q_heads", cfg.heads));
    s.push_back(split_stage(p + "split_heads_k", p + "k", p + "k_heads", cfg.heads));
    s.push_back(split_stage(p + "split_heads_v", p + "v", p + "v_heads", cfg.heads));
    s.push_back(map_stage(p + "transpose_k", p + "k_heads", p + "k_t",
                          [](const BlockedMatrix& a) { return block_transpose(a); }));
    s.push_back(zip_stage(p + "matmul_qk", p + "q_heads", p + "k_t", p + "scores", matmul));
    s.push_back(map_stage(p + "scale_scores", p + "scores", p + "scaled", [scale](const BlockedMatrix& a) {
        return elementwise_map(a, ElementwiseFn::scale(scale));
    }));
    s.push_back(map_stage(p + "softmax_exp_scan", p + "scaled", p + "exp", pipeline::softmax_exp_scan));
    s.push_back(map_stage(p + "softmax_aggregate_divide", p + "exp", p + "probs",
                          pipeline::softmax_aggregate_divide));
    s.push_back(zip_stage(p + "matmul_av", p + "probs", p + "v_heads", p + "context", matmul));
    std::vector<std::string> unify_inputs{p + "context"};
    if (cfg.use_output_projection) unify_inputs.push_back(p + "wo");
    s.push_back(unify_stage(p + "unify_heads", unify_inputs, p + "attention", cfg.heads));

    // Feed-forward sub-block input and residual base depend on topology.
    std::string ffn_in;
    std::string residual_base;
    if (cfg.netsdb_dataflow) {
        s.push_back(map_stage(p + "layer_norm_1", p + "attention", p + "ln1", norm));
        ffn_in = p + "ln1";
        residual_base = p + "ln1";
    } else {
        s.push_back(zip_stage(p + "residual_join_1", input, p + "attention", p + "u", add, dropout_note));
        s.push_back(map_stage(p + "layer_norm_2", p + "u", p + "ln2", norm));
        ffn_in = p + "ln2";
        residual_base = p + "u";
    }
    s.push_back(zip_stage(p + "matmul_w0", ffn_in, p + "w0", p + "h0", matmul));
    s.push_back(zip_stage(p + "bias_b0", p + "h0", p + "b0", p + "h0_bias", add_bias));
    s.push_back(map_stage(p + "relu_0", p + "h0_bias", p + "h0_relu", relu));
    s.push_back(zip_stage(p + "matmul_w1", p + "h0_relu", p + "w1", p + "h1", matmul));
    s.push_back(zip_stage(p + "bias_b1", p + "h1", p + "b1", p + "h1_bias", add_bias));
    std::string ffn_out = p + "h1_bias";
    if (cfg.final_ffn_relu) {
        s.push_back(map_stage(p + "relu_1", ffn_out, p + "ffn", relu));
        ffn_out = p + "ffn";
    }
    output = p + "out";
    s.push_back(zip_stage(p + (cfg.netsdb_dataflow ? "residual_join_1" : "residual_join_2"),
                          residual_base, ffn_out, output, add, dropout_note));
    return s;
}

PreparedWeights prepare_weights(const EncoderWeights& w, const ModelConfig& cfg) {
    validate_weights(w, cfg);
    PreparedWeights out;
    for (auto& set : to_block_sets(w, cfg)) out.sets.push_back(TensorSet::of(set.name, std::move(set.matrix)));
    return out;
}

ForwardResult model_forward(const BatchedTensor& x, const EncoderWeights& w, const ModelConfig& cfg,
                            pipeline::ExecutionMode mode, storage::SetStore* store) {
    if (cfg.n_blocks == 0) return model_forward(x, PreparedWeights{}, cfg, mode, store);
    return model_forward(x, prepare_weights(w, cfg), cfg, mode, store);
}

ForwardResult model_forward(const BatchedTensor& x, const PreparedWeights& w, const ModelConfig& cfg,
                            pipeline::ExecutionMode mode, storage::SetStore* store) {
    cfg.validate();
    x.validate();
    for (const auto& m : x.items) {
        if (m.rows() != cfg.seq_len || m.cols() != cfg.embed_dim || m.block_dim() != cfg.block_dim) {
            throw ShapeError("model_forward: input item is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + "/bd" + std::to_string(m.block_dim()) +
                             ", config expects " + std::to_string(cfg.seq_len) + "x" +
                             std::to_string(cfg.embed_dim) + "/bd" + std::to_string(cfg.block_dim));
        }
    }
    if (cfg.n_blocks == 0) return {x, {}};
    if (w.sets.size() != cfg.n_blocks * weight_sets_per_block(cfg)) {
        throw ShapeError("model_forward: " + std::to_string(w.sets.size()) + " prepared weight sets, config needs " +
                         std::to_string(cfg.n_blocks * weight_sets_per_block(cfg)));
    }

    const TensorSet input{"x", x, false};
    std::vector<const TensorSet*> inputs{&input};
    for (const auto& set : w.sets) inputs.push_back(&set);
    std::vector<Stage> stages;
    std::string current = "x";
    for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
        std::string next;
        for (auto& st : encoder_block_stages(cfg, b, current, next)) stages.push_back(std::move(st));
        current = next;
    }
    auto result = pipeline::run_pipeline(stages, std::span<const TensorSet* const>(inputs), mode, store);
    return {std::move(result.output.value), std::move(result.trace)};
}

BatchedTensor make_batch(std::span<const DenseMatrix> items, const ModelConfig& cfg) {
    BatchedTensor out;
    for (const auto& m : items) {
        if (m.rows != cfg.seq_len || m.cols != cfg.embed_dim) {
            throw ShapeError("input item is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                             ", expected " + std::to_string(cfg.seq_len) + "x" +
                             std::to_string(cfg.embed_dim));
        }
        out.items.push_back(partition(m, cfg.block_dim));
    }
    return out;
}

}  // namespace blockformer
