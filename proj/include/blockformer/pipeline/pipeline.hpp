#pragma once

#include <chrono>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "blockformer/storage/set_store.hpp"
#include "blockformer/tensor/blocked_matrix.hpp"

namespace blockformer::pipeline {

/// A named relation of tensor blocks. Single matrices are batches of one.
struct TensorSet {
    std::string name;
    BatchedTensor value;
    bool materialized = false;

    static TensorSet of(std::string name, BlockedMatrix m);
    /// The only item; throws ShapeError if batch != 1.
    const BlockedMatrix& matrix() const;
};

struct StageTrace {
    std::string stage_name;
    std::vector<std::string> input_sets;
    std::string output_set;
    std::chrono::nanoseconds wall_time{0};
    std::size_t blocks_processed = 0;
    bool materialized = false;
    std::string note;
};

enum class ExecutionMode { kMemory, kMaterialize };

/// Per logical row, folds every element in column order (block keys
/// row-major, then local column). Grouped aggregate keyed by row.
std::vector<double> aggregate_rows(const BlockedMatrix& m, double init,
                                   const std::function<double(double, float)>& fold);

/// Softmax phase 1: subtract each row's max, exponentiate every element.
BlockedMatrix softmax_exp_scan(const BlockedMatrix& a);
/// Softmax phase 2: aggregate each row's exponentials, divide by the total.
BlockedMatrix softmax_aggregate_divide(const BlockedMatrix& exps);
BlockedMatrix softmax_two_phase(const BlockedMatrix& a);

/// Per row: (x - mean) / sqrt(var + eps), population variance, no affine terms.
BlockedMatrix layer_norm(const BlockedMatrix& a, float eps);

/// x + fx item by item through the key join; appends one trace entry when a
/// trace is given.
TensorSet residual_add(const TensorSet& x, const TensorSet& fx, std::string output_name,
                       std::vector<StageTrace>* trace = nullptr);

/// Intermediate writer. Materialize mode persists the set and returns what
/// reads back; memory mode passes it through. Either way a trace entry is
/// appended when a trace is given. Store failures surface as
/// StageFailureError naming the stage.
TensorSet materialize(TensorSet s, storage::SetStore* store, ExecutionMode mode,
                      std::vector<StageTrace>* trace = nullptr);

using StageFn = std::function<BatchedTensor(std::span<const TensorSet* const>)>;

struct Stage {
    std::string name;
    std::vector<std::string> inputs;
    std::string output;
    StageFn compute;
    std::string note;
};

/// Stage applying fn to every item of one input.
Stage map_stage(std::string name, std::string input, std::string output,
                std::function<BlockedMatrix(const BlockedMatrix&)> fn, std::string note = {});

/// Stage pairing items of two inputs; a batch-1 side is broadcast.
Stage zip_stage(std::string name, std::string lhs, std::string rhs, std::string output,
                std::function<BlockedMatrix(const BlockedMatrix&, const BlockedMatrix&)> fn,
                std::string note = {});

struct PipelineResult {
    TensorSet output;
    std::vector<StageTrace> trace;
};

/// Executes stages in order. Wiring is checked before anything runs: every
/// input must be a declared input or an earlier stage's output (WiringError),
/// and output names must be fresh (NameCollisionError). In materialize mode
/// each stage output goes through the store before later stages read it.
/// Returns the last stage's output and one trace entry per stage.
PipelineResult run_pipeline(std::span<const Stage> stages, std::vector<TensorSet> inputs,
                            ExecutionMode mode, storage::SetStore* store = nullptr);

/// Same, but borrows the input sets; they must outlive the call.
PipelineResult run_pipeline(std::span<const Stage> stages, std::span<const TensorSet* const> inputs,
                            ExecutionMode mode, storage::SetStore* store = nullptr);

}  // namespace blockformer::pipeline
