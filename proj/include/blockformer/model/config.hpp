#pragma once

#include <cstddef>
#include <cstdint>

#include "json.hpp"

namespace blockformer {

/// Encoder hyperparameters. Defaults follow the reference experiment:
/// batch 2, sequence length 10, embedding 64, 4 heads, two encoder blocks.
struct ModelConfig {
    std::size_t batch = 2;
    std::size_t seq_len = 10;
    std::size_t embed_dim = 64;
    std::size_t heads = 4;
    std::size_t ffn_hidden = 256;
    std::size_t n_blocks = 2;
    double dropout_p = 0.1;  // recorded only; inference never drops
    float layernorm_eps = 1e-5f;
    bool use_output_projection = false;
    bool final_ffn_relu = true;
    /// Alternative block topology: attention -> layer norm -> FFN, with the
    /// residual joining the FFN output to the layer-norm output.
    bool netsdb_dataflow = false;
    std::size_t block_dim = 8;
    std::uint64_t seed = 42;

    std::size_t head_dim() const { return embed_dim / heads; }

    /// Throws ConfigError on an inconsistent configuration.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults; the result is validated.
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace blockformer
