#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockformer/common/dense_matrix.hpp"
#include "blockformer/model/config.hpp"
#include "blockformer/oracle/dense_ops.hpp"
#include "blockformer/storage/dedup.hpp"
#include "blockformer/storage/page_store.hpp"
#include "blockformer/tensor/blocked_matrix.hpp"

namespace blockformer {

/// Parameters of one encoder block. Seven sets by default (Wq, Wk, Wv, w0,
/// b0, w1, b1); Wo only with use_output_projection.
struct BlockWeights {
    BlockedMatrix wq, wk, wv;
    std::optional<BlockedMatrix> wo;
    BlockedMatrix w0;
    std::vector<float> b0;
    BlockedMatrix w1;
    std::vector<float> b1;
};

struct EncoderWeights {
    std::vector<BlockWeights> blocks;
};

/// A weight set in dense form; biases are 1 x n. The name doubles as the
/// equivalence-class role ("block0.wq", ...).
struct NamedWeight {
    std::string name;
    DenseMatrix value;
};

/// Weight-set names in canonical order for a config.
std::vector<std::string> weight_set_names(const ModelConfig& cfg);
std::size_t weight_sets_per_block(const ModelConfig& cfg);
std::size_t parameters_per_block(const ModelConfig& cfg);

/// Uniform(-a, a) with a = sqrt(1 / fan_in), every set drawn from its own
/// stream derived from (seed, set name). Same seed, same bytes.
EncoderWeights init_random(const ModelConfig& cfg);

/// Throws ShapeError unless every set has the shape cfg implies.
void validate_weights(const EncoderWeights& w, const ModelConfig& cfg);

std::vector<NamedWeight> to_named(const EncoderWeights& w, const ModelConfig& cfg);
EncoderWeights from_named(std::span<const NamedWeight> sets, const ModelConfig& cfg);

/// Storage view: set names are prefix + role, roles are the weight names.
std::vector<storage::NamedBlockSet> to_block_sets(const EncoderWeights& w, const ModelConfig& cfg,
                                                  const std::string& prefix = {});
EncoderWeights load_weights(const storage::Catalog& catalog, std::span<const storage::Page> pages,
                            const ModelConfig& cfg, const std::string& prefix = {});

oracle::DenseWeights to_dense(const EncoderWeights& w);

}  // namespace blockformer
