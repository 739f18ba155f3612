#include "blockformer/cli/bench_report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "blockformer/common/error.hpp"

namespace blockformer::cli {

using nlohmann::json;

TimingStats TimingStats::from_samples(std::vector<double> samples_ms) {
    TimingStats t;
    t.samples_ms = std::move(samples_ms);
    if (!t.samples_ms.empty()) {
        t.mean_ms = std::accumulate(t.samples_ms.begin(), t.samples_ms.end(), 0.0) /
                    static_cast<double>(t.samples_ms.size());
        const auto [lo, hi] = std::minmax_element(t.samples_ms.begin(), t.samples_ms.end());
        t.min_ms = *lo;
        t.max_ms = *hi;
    }
    return t;
}

const EngineReport& BenchReport::engine(const std::string& name) const {
    for (const auto& e : engines) {
        if (e.engine == name) return e;
    }
    throw InvalidArgumentError("bench report has no engine '" + name + "'");
}

void to_json(json& j, const TimingStats& t) {
    j = json{{"samples_ms", t.samples_ms}, {"mean_ms", t.mean_ms}, {"min_ms", t.min_ms}, {"max_ms", t.max_ms}};
}

void from_json(const json& j, TimingStats& t) {
    j.at("samples_ms").get_to(t.samples_ms);
    j.at("mean_ms").get_to(t.mean_ms);
    j.at("min_ms").get_to(t.min_ms);
    j.at("max_ms").get_to(t.max_ms);
}

void to_json(json& j, const BenchReport& r) {
    json engines = json::array();
    for (const auto& e : r.engines) {
        json stages = json::array();
        for (const auto& s : e.stages) {
            stages.push_back({{"name", s.name}, {"time", s.time}, {"blocks_processed", s.blocks_processed}});
        }
        engines.push_back({{"engine", e.engine},
                           {"total", e.total},
                           {"stages", std::move(stages)},
                           {"model_bytes",
                            {{"naive", e.model_bytes.naive},
                             {"deduped", e.model_bytes.deduped},
                             {"packed", e.model_bytes.packed}}}});
    }
    j = json{{"schema", r.schema},
             {"config", r.config},
             {"iterations", r.iterations},
             {"seed", r.seed},
             {"materialize", r.materialize},
             {"timestamp", r.timestamp},
             {"engines", std::move(engines)}};
}

void from_json(const json& j, BenchReport& r) {
    j.at("schema").get_to(r.schema);
    r.config = j.at("config").get<ModelConfig>();
    j.at("iterations").get_to(r.iterations);
    j.at("seed").get_to(r.seed);
    j.at("materialize").get_to(r.materialize);
    j.at("timestamp").get_to(r.timestamp);
    r.engines.clear();
    for (const auto& ej : j.at("engines")) {
        EngineReport e;
        ej.at("engine").get_to(e.engine);
        ej.at("total").get_to(e.total);
        for (const auto& sj : ej.at("stages")) {
            StageTiming s;
            sj.at("name").get_to(s.name);
            sj.at("time").get_to(s.time);
            sj.at("blocks_processed").get_to(s.blocks_processed);
            e.stages.push_back(std::move(s));
        }
        const auto& mb = ej.at("model_bytes");
        mb.at("naive").get_to(e.model_bytes.naive);
        mb.at("deduped").get_to(e.model_bytes.deduped);
        mb.at("packed").get_to(e.model_bytes.packed);
        r.engines.push_back(std::move(e));
    }
}

namespace {

void check_timing(const json& t, const std::string& where, std::size_t iterations,
                  std::vector<std::string>& errors) {
    if (!t.is_object()) {
        errors.push_back(where + ": not an object");
        return;
    }
    for (const char* key : {"mean_ms", "min_ms", "max_ms"}) {
        if (!t.contains(key) || !t.at(key).is_number() || t.at(key).get<double>() < 0.0) {
            errors.push_back(where + "." + key + ": missing or negative");
        }
    }
    if (!t.contains("samples_ms") || !t.at("samples_ms").is_array()) {
        errors.push_back(where + ".samples_ms: missing");
        return;
    }
    const auto& samples = t.at("samples_ms");
    if (samples.size() != iterations) {
        errors.push_back(where + ".samples_ms: " + std::to_string(samples.size()) + " samples for " +
                         std::to_string(iterations) + " iterations");
    }
    for (const auto& s : samples) {
        if (!s.is_number() || s.get<double>() < 0.0) errors.push_back(where + ".samples_ms: bad sample");
    }
    if (errors.empty() && !samples.empty()) {
        const double lo = t.at("min_ms").get<double>();
        const double hi = t.at("max_ms").get<double>();
        const double mean = t.at("mean_ms").get<double>();
        if (lo > mean + 1e-9 || mean > hi + 1e-9) errors.push_back(where + ": min <= mean <= max violated");
    }
}

}  // namespace

std::vector<std::string> validate_bench_report(const json& j) {
    std::vector<std::string> errors;
    if (!j.is_object()) return {"report: not an object"};
    if (j.value("schema", std::string{}) != kBenchSchema) errors.push_back("schema: expected " + std::string(kBenchSchema));
    std::size_t iterations = 0;
    if (!j.contains("iterations") || !j.at("iterations").is_number_unsigned() ||
        (iterations = j.at("iterations").get<std::size_t>()) < 1) {
        errors.push_back("iterations: must be an integer >= 1");
    }
    if (!j.contains("seed") || !j.at("seed").is_number_integer()) errors.push_back("seed: missing");
    if (!j.contains("timestamp") || !j.at("timestamp").is_string()) errors.push_back("timestamp: missing");
    if (!j.contains("materialize") || !j.at("materialize").is_boolean()) errors.push_back("materialize: missing");
    if (!j.contains("config") || !j.at("config").is_object()) {
        errors.push_back("config: missing");
    } else {
        try {
            (void)j.at("config").get<ModelConfig>();
        } catch (const std::exception& e) {
            errors.push_back(std::string("config: ") + e.what());
        }
    }
    if (!j.contains("engines") || !j.at("engines").is_array() || j.at("engines").empty()) {
        errors.push_back("engines: missing or empty");
        return errors;
    }
    for (const auto& e : j.at("engines")) {
        const std::string name = e.value("engine", std::string{});
        if (name != "blocked" && name != "dense-oracle") errors.push_back("engine: unknown name '" + name + "'");
        check_timing(e.value("total", json{}), name + ".total", iterations, errors);
        if (!e.contains("stages") || !e.at("stages").is_array()) {
            errors.push_back(name + ".stages: missing");
        } else {
            for (const auto& s : e.at("stages")) {
                const std::string sname = s.value("name", std::string{});
                if (sname.empty()) errors.push_back(name + ".stages: unnamed stage");
                check_timing(s.value("time", json{}), name + "." + sname, iterations, errors);
                if (!s.contains("blocks_processed") || !s.at("blocks_processed").is_number_unsigned()) {
                    errors.push_back(name + "." + sname + ".blocks_processed: missing");
                }
            }
        }
        const auto mb = e.value("model_bytes", json{});
        for (const char* key : {"naive", "deduped", "packed"}) {
            if (!mb.is_object() || !mb.contains(key) || !mb.at(key).is_number_unsigned()) {
                errors.push_back(name + ".model_bytes." + key + ": missing");
            }
        }
    }
    return errors;
}

std::string format_bench_table(const BenchReport& r) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "| %-14s | %-27s | %-16s |\n", "Engine", "Average Inference Time (ms)",
                  "Model Size (KB)");
    out += line;
    out += "|----------------|-----------------------------|------------------|\n";
    for (const auto& e : r.engines) {
        std::snprintf(line, sizeof line, "| %-14s | %27.4f | %16.1f |\n", e.engine.c_str(), e.total.mean_ms,
                      static_cast<double>(e.model_bytes.packed) / 1024.0);
        out += line;
    }
    return out;
}

}  // namespace blockformer::cli
