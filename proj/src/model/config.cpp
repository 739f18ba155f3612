#include "blockformer/model/config.hpp"

#include <string>

#include "blockformer/common/error.hpp"

namespace blockformer {

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
    };
    positive(batch, "batch");
    positive(seq_len, "seq_len");
    positive(embed_dim, "embed_dim");
    positive(heads, "heads");
    positive(ffn_hidden, "ffn_hidden");
    positive(block_dim, "block_dim");
    if (embed_dim % heads != 0) {
        throw ConfigError("embed_dim divisible by heads is required (embed_dim=" +
                          std::to_string(embed_dim) + ", heads=" + std::to_string(heads) + ")");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must be in [0, 1)");
    if (!(layernorm_eps >= 0.0f)) throw ConfigError("layernorm_eps must be non-negative");
    if (block_dim > 0xFFFF) throw ConfigError("block_dim exceeds 65535");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{
        {"batch", c.batch},
        {"seq_len", c.seq_len},
        {"embed_dim", c.embed_dim},
        {"heads", c.heads},
        {"head_dim", c.head_dim()},
        {"ffn_hidden", c.ffn_hidden},
        {"n_blocks", c.n_blocks},
        {"dropout_p", c.dropout_p},
        {"layernorm_eps", c.layernorm_eps},
        {"use_output_projection", c.use_output_projection},
        {"final_ffn_relu", c.final_ffn_relu},
        {"netsdb_dataflow", c.netsdb_dataflow},
        {"block_dim", c.block_dim},
        {"seed", c.seed},
    };
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    try {
        c.batch = j.value("batch", c.batch);
        c.seq_len = j.value("seq_len", c.seq_len);
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.heads = j.value("heads", c.heads);
        c.ffn_hidden = j.value("ffn_hidden", c.ffn_hidden);
        c.n_blocks = j.value("n_blocks", c.n_blocks);
        c.dropout_p = j.value("dropout_p", c.dropout_p);
        c.layernorm_eps = j.value("layernorm_eps", c.layernorm_eps);
        c.use_output_projection = j.value("use_output_projection", c.use_output_projection);
        c.final_ffn_relu = j.value("final_ffn_relu", c.final_ffn_relu);
        c.netsdb_dataflow = j.value("netsdb_dataflow", c.netsdb_dataflow);
        c.block_dim = j.value("block_dim", c.block_dim);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad model config: ") + e.what());
    }
    if (j.contains("head_dim") && c.heads != 0 &&
        j.at("head_dim").get<std::size_t>() * c.heads != c.embed_dim) {
        throw ConfigError("head_dim inconsistent with embed_dim / heads");
    }
    c.validate();
}

}  // namespace blockformer
