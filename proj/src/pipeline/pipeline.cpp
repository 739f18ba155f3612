#include "blockformer/pipeline/pipeline.hpp"

#include <cmath>
#include <map>
#include <set>

#include "blockformer/common/error.hpp"
#include "blockformer/tensor/ops.hpp"

namespace blockformer::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

/// out(i, j) = fn(row i, value) tile by tile.
template <typename Fn>
BlockedMatrix map_with_row(const BlockedMatrix& a, Fn&& fn) {
    BlockedMatrix out(a.rows(), a.cols(), a.block_dim());
    for (const auto& [key, src] : a.blocks()) {
        TensorBlock t(key, src.rows, src.cols);
        const std::size_t row0 = static_cast<std::size_t>(key.row) * a.block_dim();
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) t.at(r, c) = fn(row0 + r, src.at(r, c));
        }
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

BatchedTensor persist(const std::string& stage, const std::string& name, const BatchedTensor& value,
                      storage::SetStore& store) {
    try {
        store.write(name, value);
        return store.read(name);
    } catch (const IoError& e) {
        throw StageFailureError(stage, e.what());
    } catch (const NameCollisionError&) {
        throw;
    }
}

}  // namespace

TensorSet TensorSet::of(std::string name, BlockedMatrix m) {
    TensorSet s;
    s.name = std::move(name);
    s.value.items.push_back(std::move(m));
    return s;
}

const BlockedMatrix& TensorSet::matrix() const {
    if (value.batch() != 1) {
        throw ShapeError("set '" + name + "' holds " + std::to_string(value.batch()) +
                         " items, expected one matrix");
    }
    return value.items.front();
}

std::vector<double> aggregate_rows(const BlockedMatrix& m, double init,
                                   const std::function<double(double, float)>& fold) {
    std::vector<double> acc(m.rows(), init);
    for (const auto& [key, t] : m.blocks()) {
        const std::size_t row0 = static_cast<std::size_t>(key.row) * m.block_dim();
        for (std::size_t r = 0; r < t.rows; ++r) {
            double& a = acc[row0 + r];
            for (std::size_t c = 0; c < t.cols; ++c) a = fold(a, t.at(r, c));
        }
    }
    return acc;
}

BlockedMatrix softmax_exp_scan(const BlockedMatrix& a) {
    const auto row_max = aggregate_rows(a, -INFINITY, [](double m, float v) { return std::max(m, double(v)); });
    return map_with_row(a, [&](std::size_t i, float v) {
        return std::exp(v - static_cast<float>(row_max[i]));
    });
}

BlockedMatrix softmax_aggregate_divide(const BlockedMatrix& exps) {
    const auto totals = aggregate_rows(exps, 0.0, [](double s, float v) { return s + v; });
    return map_with_row(exps, [&](std::size_t i, float v) {
        return static_cast<float>(double(v) / totals[i]);
    });
}

BlockedMatrix softmax_two_phase(const BlockedMatrix& a) {
    return softmax_aggregate_divide(softmax_exp_scan(a));
}

BlockedMatrix layer_norm(const BlockedMatrix& a, float eps) {
    const double n = static_cast<double>(a.cols());
    auto mean = aggregate_rows(a, 0.0, [](double s, float v) { return s + v; });
    for (double& m : mean) m /= n;
    // Second pass over the relation for the centered sum of squares.
    std::vector<double> var(a.rows(), 0.0);
    for (const auto& [key, t] : a.blocks()) {
        const std::size_t row0 = static_cast<std::size_t>(key.row) * a.block_dim();
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) {
                const double d = t.at(r, c) - mean[row0 + r];
                var[row0 + r] += d * d;
            }
        }
    }
    std::vector<double> inv_std(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) inv_std[i] = 1.0 / std::sqrt(var[i] / n + double(eps));
    return map_with_row(a, [&](std::size_t i, float v) {
        return static_cast<float>((v - mean[i]) * inv_std[i]);
    });
}

TensorSet residual_add(const TensorSet& x, const TensorSet& fx, std::string output_name,
                       std::vector<StageTrace>* trace) {
    const auto start = Clock::now();
    if (x.value.batch() != fx.value.batch()) {
        throw ShapeError("residual_add: batch " + std::to_string(x.value.batch()) + " vs " +
                         std::to_string(fx.value.batch()));
    }
    TensorSet out;
    out.name = std::move(output_name);
    for (std::size_t i = 0; i < x.value.batch(); ++i) {
        out.value.items.push_back(elementwise_add(x.value.items[i], fx.value.items[i]));
    }
    if (trace) {
        trace->push_back({"residual_join", {x.name, fx.name}, out.name, Clock::now() - start,
                          x.value.block_count() + fx.value.block_count(), false, {}});
    }
    return out;
}

TensorSet materialize(TensorSet s, storage::SetStore* store, ExecutionMode mode,
                      std::vector<StageTrace>* trace) {
    const auto start = Clock::now();
    const std::string stage = "materialize:" + s.name;
    if (mode == ExecutionMode::kMaterialize) {
        if (!store) throw StageFailureError(stage, "no store attached");
        s.value = persist(stage, s.name, s.value, *store);
        s.materialized = true;
    }
    if (trace) {
        trace->push_back({stage, {s.name}, s.name, Clock::now() - start, s.value.block_count(),
                          s.materialized, mode == ExecutionMode::kMemory ? "memory mode" : ""});
    }
    return s;
}

Stage map_stage(std::string name, std::string input, std::string output,
                std::function<BlockedMatrix(const BlockedMatrix&)> fn, std::string note) {
    return Stage{std::move(name), {std::move(input)}, std::move(output),
                 [fn = std::move(fn)](std::span<const TensorSet* const> in) {
                     BatchedTensor out;
                     for (const auto& m : in[0]->value.items) out.items.push_back(fn(m));
                     return out;
                 },
                 std::move(note)};
}

Stage zip_stage(std::string name, std::string lhs, std::string rhs, std::string output,
                std::function<BlockedMatrix(const BlockedMatrix&, const BlockedMatrix&)> fn,
                std::string note) {
    return Stage{std::move(name), {std::move(lhs), std::move(rhs)}, std::move(output),
                 [fn = std::move(fn)](std::span<const TensorSet* const> in) {
                     const auto& a = in[0]->value.items;
                     const auto& b = in[1]->value.items;
                     if (a.size() != b.size() && a.size() != 1 && b.size() != 1) {
                         throw ShapeError("zip of '" + in[0]->name + "' and '" + in[1]->name +
                                          "': batch " + std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()));
                     }
                     const std::size_t n = std::max(a.size(), b.size());
                     BatchedTensor out;
                     for (std::size_t i = 0; i < n; ++i) {
                         out.items.push_back(fn(a[a.size() == 1 ? 0 : i], b[b.size() == 1 ? 0 : i]));
                     }
                     return out;
                 },
                 std::move(note)};
}

PipelineResult run_pipeline(std::span<const Stage> stages, std::vector<TensorSet> inputs,
                            ExecutionMode mode, storage::SetStore* store) {
    std::vector<const TensorSet*> borrowed;
    borrowed.reserve(inputs.size());
    for (const auto& in : inputs) borrowed.push_back(&in);
    return run_pipeline(stages, std::span<const TensorSet* const>(borrowed), mode, store);
}

PipelineResult run_pipeline(std::span<const Stage> stages, std::span<const TensorSet* const> inputs,
                            ExecutionMode mode, storage::SetStore* store) {
    if (stages.empty()) throw WiringError("pipeline has no stages");
    std::set<std::string> declared;
    for (const auto* in : inputs) {
        if (!declared.insert(in->name).second) {
            throw NameCollisionError("input set '" + in->name + "' declared twice");
        }
    }
    for (const auto& stage : stages) {
        for (const auto& name : stage.inputs) {
            if (!declared.count(name)) {
                throw WiringError("stage '" + stage.name + "' reads undeclared set '" + name + "'");
            }
        }
        if (!declared.insert(stage.output).second) {
            throw NameCollisionError("stage '" + stage.name + "' overwrites set '" + stage.output + "'");
        }
    }
    if (mode == ExecutionMode::kMaterialize && !store) {
        throw InvalidArgumentError("materialize mode needs a set store");
    }

    std::map<std::string, const TensorSet*> visible;
    for (const auto* in : inputs) visible.emplace(in->name, in);
    std::map<std::string, TensorSet> produced;

    PipelineResult result;
    result.trace.reserve(stages.size());
    for (const auto& stage : stages) {
        const auto start = Clock::now();
        std::vector<const TensorSet*> args;
        std::size_t blocks = 0;
        for (const auto& name : stage.inputs) {
            args.push_back(visible.at(name));
            blocks += args.back()->value.block_count();
        }
        TensorSet out;
        out.name = stage.output;
        out.value = stage.compute(args);
        out.value.validate();
        if (mode == ExecutionMode::kMaterialize) {
            out.value = persist(stage.name, out.name, out.value, *store);
            out.materialized = true;
        }
        result.trace.push_back({stage.name, stage.inputs, stage.output, Clock::now() - start, blocks,
                                out.materialized, stage.note});
        auto& slot = produced.emplace(stage.output, std::move(out)).first->second;
        visible.emplace(stage.output, &slot);
    }
    result.output = std::move(produced.at(stages.back().output));
    return result;
}

}  // namespace blockformer::pipeline
