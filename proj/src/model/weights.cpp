#include "blockformer/model/weights.hpp"

#include <cmath>
#include <map>

#include "blockformer/common/error.hpp"
#include "blockformer/common/random.hpp"
#include "blockformer/tensor/ops.hpp"

namespace blockformer {

namespace {

struct SetShape {
    std::string role;  // wq, wk, ...
    std::size_t rows;
    std::size_t cols;
    std::size_t fan_in;
};

std::vector<SetShape> block_shapes(const ModelConfig& cfg) {
    const std::size_t e = cfg.embed_dim;
    const std::size_t f = cfg.ffn_hidden;
    std::vector<SetShape> shapes{{"wq", e, e, e}, {"wk", e, e, e}, {"wv", e, e, e}};
    if (cfg.use_output_projection) shapes.push_back({"wo", e, e, e});
    shapes.push_back({"w0", e, f, e});
    shapes.push_back({"b0", 1, f, e});
    shapes.push_back({"w1", f, e, f});
    shapes.push_back({"b1", 1, e, f});
    return shapes;
}

std::string set_name(std::size_t block, const std::string& role) {
    return "block" + std::to_string(block) + "." + role;
}

void check_shape(const BlockedMatrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError("weight set " + name + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

BlockedMatrix row_matrix(const std::vector<float>& v, std::size_t block_dim) {
    return partition(v, 1, v.size(), block_dim);
}

}  // namespace

std::vector<std::string> weight_set_names(const ModelConfig& cfg) {
    std::vector<std::string> names;
    for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
        for (const auto& s : block_shapes(cfg)) names.push_back(set_name(b, s.role));
    }
    return names;
}

std::size_t weight_sets_per_block(const ModelConfig& cfg) { return block_shapes(cfg).size(); }

std::size_t parameters_per_block(const ModelConfig& cfg) {
    std::size_t n = 0;
    for (const auto& s : block_shapes(cfg)) n += s.rows * s.cols;
    return n;
}

EncoderWeights init_random(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<NamedWeight> named;
    for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
        for (const auto& s : block_shapes(cfg)) {
            const std::string name = set_name(b, s.role);
            Rng rng(derive_seed(cfg.seed, name));
            const float a = static_cast<float>(std::sqrt(1.0 / static_cast<double>(s.fan_in)));
            DenseMatrix m(s.rows, s.cols);
            for (float& v : m.data) v = rng.uniform(-a, a);
            named.push_back({name, std::move(m)});
        }
    }
    return from_named(named, cfg);
}

void validate_weights(const EncoderWeights& w, const ModelConfig& cfg) {
    if (w.blocks.size() != cfg.n_blocks) {
        throw ShapeError("weights hold " + std::to_string(w.blocks.size()) + " blocks, config expects " +
                         std::to_string(cfg.n_blocks));
    }
    const std::size_t e = cfg.embed_dim;
    const std::size_t f = cfg.ffn_hidden;
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        const auto& bw = w.blocks[b];
        check_shape(bw.wq, e, e, set_name(b, "wq"));
        check_shape(bw.wk, e, e, set_name(b, "wk"));
        check_shape(bw.wv, e, e, set_name(b, "wv"));
        if (cfg.use_output_projection) {
            if (!bw.wo) throw ShapeError("weight set " + set_name(b, "wo") + " missing");
            check_shape(*bw.wo, e, e, set_name(b, "wo"));
        }
        check_shape(bw.w0, e, f, set_name(b, "w0"));
        check_shape(bw.w1, f, e, set_name(b, "w1"));
        if (bw.b0.size() != f || bw.b1.size() != e) {
            throw ShapeError("bias length mismatch in block " + std::to_string(b));
        }
    }
}

std::vector<NamedWeight> to_named(const EncoderWeights& w, const ModelConfig& cfg) {
    validate_weights(w, cfg);
    std::vector<NamedWeight> out;
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        const auto& bw = w.blocks[b];
        out.push_back({set_name(b, "wq"), reassemble(bw.wq)});
        out.push_back({set_name(b, "wk"), reassemble(bw.wk)});
        out.push_back({set_name(b, "wv"), reassemble(bw.wv)});
        if (cfg.use_output_projection) out.push_back({set_name(b, "wo"), reassemble(*bw.wo)});
        out.push_back({set_name(b, "w0"), reassemble(bw.w0)});
        out.push_back({set_name(b, "b0"), DenseMatrix(1, bw.b0.size(), bw.b0)});
        out.push_back({set_name(b, "w1"), reassemble(bw.w1)});
        out.push_back({set_name(b, "b1"), DenseMatrix(1, bw.b1.size(), bw.b1)});
    }
    return out;
}

EncoderWeights from_named(std::span<const NamedWeight> sets, const ModelConfig& cfg) {
    std::map<std::string, const DenseMatrix*> by_name;
    for (const auto& s : sets) by_name[s.name] = &s.value;
    auto get = [&](std::size_t b, const std::string& role) -> const DenseMatrix& {
        auto it = by_name.find(set_name(b, role));
        if (it == by_name.end()) throw ShapeError("weight set " + set_name(b, role) + " missing");
        return *it->second;
    };
    const std::size_t bd = cfg.block_dim;
    EncoderWeights w;
    for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
        BlockWeights bw;
        bw.wq = partition(get(b, "wq"), bd);
        bw.wk = partition(get(b, "wk"), bd);
        bw.wv = partition(get(b, "wv"), bd);
        if (cfg.use_output_projection) bw.wo = partition(get(b, "wo"), bd);
        bw.w0 = partition(get(b, "w0"), bd);
        bw.b0 = get(b, "b0").data;
        bw.w1 = partition(get(b, "w1"), bd);
        bw.b1 = get(b, "b1").data;
        if (get(b, "b0").rows != 1 || get(b, "b1").rows != 1) {
            throw ShapeError("bias sets must be single-row matrices");
        }
        w.blocks.push_back(std::move(bw));
    }
    validate_weights(w, cfg);
    return w;
}

std::vector<storage::NamedBlockSet> to_block_sets(const EncoderWeights& w, const ModelConfig& cfg,
                                                  const std::string& prefix) {
    validate_weights(w, cfg);
    std::vector<storage::NamedBlockSet> out;
    auto add = [&](std::size_t b, const std::string& role, BlockedMatrix m) {
        const std::string name = set_name(b, role);
        out.push_back({prefix + name, name, std::move(m)});
    };
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        const auto& bw = w.blocks[b];
        add(b, "wq", bw.wq);
        add(b, "wk", bw.wk);
        add(b, "wv", bw.wv);
        if (cfg.use_output_projection) add(b, "wo", *bw.wo);
        add(b, "w0", bw.w0);
        add(b, "b0", row_matrix(bw.b0, cfg.block_dim));
        add(b, "w1", bw.w1);
        add(b, "b1", row_matrix(bw.b1, cfg.block_dim));
    }
    return out;
}

EncoderWeights load_weights(const storage::Catalog& catalog, std::span<const storage::Page> pages,
                            const ModelConfig& cfg, const std::string& prefix) {
    std::vector<NamedWeight> named;
    for (const auto& name : weight_set_names(cfg)) {
        if (!catalog.has_set(prefix + name)) {
            throw ShapeError("store has no weight set '" + prefix + name + "'");
        }
        named.push_back({name, reassemble(storage::read_set(catalog, pages, prefix + name))});
    }
    return from_named(named, cfg);
}

oracle::DenseWeights to_dense(const EncoderWeights& w) {
    oracle::DenseWeights out;
    for (const auto& bw : w.blocks) {
        oracle::DenseBlockWeights d;
        d.wq = reassemble(bw.wq);
        d.wk = reassemble(bw.wk);
        d.wv = reassemble(bw.wv);
        if (bw.wo) d.wo = reassemble(*bw.wo);
        d.w0 = reassemble(bw.w0);
        d.b0 = bw.b0;
        d.w1 = reassemble(bw.w1);
        d.b1 = bw.b1;
        out.blocks.push_back(std::move(d));
    }
    return out;
}

}  // namespace blockformer
