#pragma once

#include <filesystem>

#include "blockformer/model/config.hpp"
#include "blockformer/model/weights.hpp"
#include "blockformer/storage/page_store.hpp"

namespace blockformer::cli {

/// On-disk model:
///   <dir>/config.json            every ModelConfig field
///   <dir>/weights/<set>.wmat     one binary WeightFile per weight set
///   <dir>/store/catalog.json     page-store index
///   <dir>/store/page_<id>.pg     packed tensor-block pages
struct ModelDirectory {
    ModelConfig config;
    EncoderWeights weights;  // read back from the page store
    storage::PackedStore store;
};

void write_model_dir(const std::filesystem::path& dir, const ModelConfig& cfg, const EncoderWeights& w,
                     std::size_t page_capacity = storage::kDefaultPageCapacity);

ModelConfig read_model_config(const std::filesystem::path& dir);

/// Loads config and page store; weights are reconstructed from pages, so a
/// damaged page surfaces as CorruptionError.
ModelDirectory read_model_dir(const std::filesystem::path& dir);

/// Loads the weights/ files instead of the page store.
EncoderWeights read_weight_files(const std::filesystem::path& dir, const ModelConfig& cfg);

}  // namespace blockformer::cli
