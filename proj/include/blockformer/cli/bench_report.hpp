#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockformer/model/config.hpp"
#include "json.hpp"

namespace blockformer::cli {

inline constexpr const char* kBenchSchema = "blockformer-bench/1";

/// All samples are kept so statistics can be recomputed from the report.
struct TimingStats {
    std::vector<double> samples_ms;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;

    static TimingStats from_samples(std::vector<double> samples_ms);
    bool operator==(const TimingStats&) const = default;
};

struct StageTiming {
    std::string name;
    TimingStats time;
    std::size_t blocks_processed = 0;
    bool operator==(const StageTiming&) const = default;
};

struct ModelBytes {
    std::size_t naive = 0;
    std::size_t deduped = 0;
    std::size_t packed = 0;
    bool operator==(const ModelBytes&) const = default;
};

struct EngineReport {
    std::string engine;  // "blocked" or "dense-oracle"
    TimingStats total;
    std::vector<StageTiming> stages;
    ModelBytes model_bytes;
    bool operator==(const EngineReport&) const = default;
};

struct BenchReport {
    std::string schema = kBenchSchema;
    ModelConfig config;
    std::size_t iterations = 1;
    std::uint64_t seed = 0;
    bool materialize = false;
    std::string timestamp;
    std::vector<EngineReport> engines;

    const EngineReport& engine(const std::string& name) const;
    bool operator==(const BenchReport&) const = default;
};

void to_json(nlohmann::json& j, const TimingStats& t);
void from_json(const nlohmann::json& j, TimingStats& t);
void to_json(nlohmann::json& j, const BenchReport& r);
void from_json(const nlohmann::json& j, BenchReport& r);

/// Structural schema check; returns one message per violation (empty = valid).
std::vector<std::string> validate_bench_report(const nlohmann::json& j);

/// Two-row table: engine, average inference time, model size.
std::string format_bench_table(const BenchReport& r);

}  // namespace blockformer::cli
