#include "blockformer/cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "CLI11.hpp"
#include "blockformer/cli/bench_report.hpp"
#include "blockformer/cli/model_dir.hpp"
#include "blockformer/cli/weight_file.hpp"
#include "blockformer/common/random.hpp"
#include "blockformer/model/encoder.hpp"
#include "blockformer/oracle/dense_ops.hpp"
#include "blockformer/storage/report.hpp"
#include "blockformer/tensor/ops.hpp"

namespace blockformer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kConfig:
        case ErrorKind::kInvalidArgument:
        case ErrorKind::kShape:
        case ErrorKind::kWiring:
        case ErrorKind::kNameCollision:
            return kExitUsage;
        case ErrorKind::kIo:
        case ErrorKind::kCorruption:
        case ErrorKind::kStageFailure:
            return kExitIo;
        case ErrorKind::kNumericOverflow:
            return kExitVerifyFailed;
    }
    return kExitIo;
}

DenseMatrix random_input(const ModelConfig& cfg, std::uint64_t seed) {
    DenseMatrix m(cfg.batch * cfg.seq_len, cfg.embed_dim);
    Rng rng(seed);
    for (auto& v : m.data) v = static_cast<float>(rng.normal());
    return m;
}

namespace {

// Splits stacked rows into batch items and back.
std::vector<DenseMatrix> unstack(const DenseMatrix& m, const ModelConfig& cfg) {
    if (m.rows != cfg.batch * cfg.seq_len || m.cols != cfg.embed_dim) {
        throw ShapeError("input has dims " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                         ", expected " + std::to_string(cfg.batch * cfg.seq_len) + "x" +
                         std::to_string(cfg.embed_dim) + " (batch " + std::to_string(cfg.batch) +
                         " * seq_len " + std::to_string(cfg.seq_len) + " rows, embed_dim cols)");
    }
    std::vector<DenseMatrix> items;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        DenseMatrix item(cfg.seq_len, cfg.embed_dim);
        const auto first = m.data.begin() + static_cast<std::ptrdiff_t>(b * cfg.seq_len * cfg.embed_dim);
        std::copy(first, first + static_cast<std::ptrdiff_t>(item.data.size()), item.data.begin());
        items.push_back(std::move(item));
    }
    return items;
}

DenseMatrix stack(const std::vector<DenseMatrix>& items) {
    if (items.empty()) return DenseMatrix(0, 0);
    DenseMatrix out(items.size() * items[0].rows, items[0].cols);
    std::size_t at = 0;
    for (const auto& it : items) {
        std::copy(it.data.begin(), it.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(at));
        at += it.data.size();
    }
    return out;
}

DenseMatrix stack(const BatchedTensor& t) {
    std::vector<DenseMatrix> items;
    for (const auto& m : t.items) items.push_back(reassemble(m));
    return stack(items);
}

double to_ms(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

// Scratch directory for materialized intermediates; removed on destruction.
class ScratchDir {
public:
    ScratchDir() {
        static std::size_t counter = 0;
        path_ = fs::temp_directory_path() /
                ("blockformer-sets-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void print_trace(std::ostream& out, const std::vector<pipeline::StageTrace>& trace) {
    for (const auto& t : trace) {
        out << "  " << t.stage_name << " [";
        for (std::size_t i = 0; i < t.input_sets.size(); ++i) out << (i ? ", " : "") << t.input_sets[i];
        out << "] -> " << t.output_set << "  " << to_ms(t.wall_time) << " ms  " << t.blocks_processed
            << " blocks" << (t.materialized ? "  materialized" : "");
        if (!t.note.empty()) out << "  (" << t.note << ")";
        out << "\n";
    }
}

struct InitOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
    std::size_t page_size = storage::kDefaultPageCapacity;
};

int cmd_init(const InitOpts& o, std::ostream& out) {
    ModelConfig cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw IoError("cannot open config '" + o.config + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        json j;
        try {
            j = json::parse(buf.str());
        } catch (const json::exception& e) {
            throw ConfigError(o.config + ": " + e.what());
        }
        try {
            from_json(j, cfg);
        } catch (const json::exception& e) {
            throw ConfigError(o.config + ": " + e.what());
        }
    }
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    const fs::path dir(o.out);
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!o.force) throw InvalidArgumentError("'" + dir.string() + "' is not empty; pass --force to overwrite");
        fs::remove_all(dir);
    }
    const auto weights = init_random(cfg);
    write_model_dir(dir, cfg, weights, o.page_size);
    out << "initialized " << dir.string() << ": " << cfg.n_blocks << " blocks, "
        << cfg.n_blocks * weight_sets_per_block(cfg) << " weight files, "
        << cfg.n_blocks * parameters_per_block(cfg) << " parameters\n";
    return kExitOk;
}

struct InferOpts {
    std::string model, input, output;
    bool materialize = false;
};

int cmd_infer(const InferOpts& o, std::ostream& out) {
    const auto model = read_model_dir(o.model);
    MatrixFormat fmt = MatrixFormat::kText;
    const DenseMatrix x = read_matrix_file(o.input, &fmt);
    const auto items = unstack(x, model.config);
    const auto batch = make_batch(items, model.config);
    std::optional<ScratchDir> scratch;
    std::optional<storage::DirectorySetStore> store;
    if (o.materialize) {
        scratch.emplace();
        store.emplace(scratch->path());
    }
    const auto result = model_forward(batch, model.weights, model.config,
                                      o.materialize ? pipeline::ExecutionMode::kMaterialize
                                                    : pipeline::ExecutionMode::kMemory,
                                      store ? &*store : nullptr);
    write_matrix_file(o.output, stack(result.output), fmt);
    out << "stage trace (" << result.trace.size() << " stages):\n";
    print_trace(out, result.trace);
    out << "wrote " << o.output << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& model_dir, double tolerance, std::ostream& out) {
    const auto model = read_model_dir(model_dir);
    const auto& cfg = model.config;
    const auto items = unstack(random_input(cfg, kVerifyInputSeed), cfg);
    const auto blocked = model_forward(make_batch(items, cfg), model.weights, cfg);
    const auto expected = oracle::dense_encoder_forward(items, to_dense(model.weights), cfg);
    const auto m = oracle::compare(stack(blocked.output), stack(expected));
    const bool pass = m.max_abs <= tolerance;
    out << "max_abs " << m.max_abs << "  max_rel " << m.max_rel << "  mean_abs " << m.mean_abs
        << "  tolerance " << tolerance << "\n"
        << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitOk : kExitVerifyFailed;
}

struct BenchOpts {
    std::string model, report;
    std::size_t iters = 10;
    bool materialize = false;
};

int cmd_bench(const BenchOpts& o, std::ostream& out) {
    if (o.iters < 1) throw InvalidArgumentError("--iters must be >= 1");
    const auto model = read_model_dir(o.model);
    const auto& cfg = model.config;
    const auto items = unstack(random_input(cfg, kVerifyInputSeed), cfg);
    const auto batch = make_batch(items, cfg);
    const auto dense_w = to_dense(model.weights);
    const auto prepared = prepare_weights(model.weights, cfg);
    const auto mode = o.materialize ? pipeline::ExecutionMode::kMaterialize : pipeline::ExecutionMode::kMemory;

    auto blocked_once = [&](std::vector<pipeline::StageTrace>* trace) {
        std::optional<ScratchDir> scratch;
        std::optional<storage::DirectorySetStore> store;
        if (o.materialize) {
            scratch.emplace();
            store.emplace(scratch->path());
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto r = model_forward(batch, prepared, cfg, mode, store ? &*store : nullptr);
        const auto t1 = std::chrono::steady_clock::now();
        if (trace) *trace = std::move(r.trace);
        return to_ms(t1 - t0);
    };
    auto oracle_once = [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = oracle::dense_encoder_forward(items, dense_w, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        (void)r;
        return to_ms(t1 - t0);
    };

    blocked_once(nullptr);
    oracle_once();

    std::vector<double> blocked_totals, oracle_totals;
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> stage_samples;
    std::map<std::string, std::size_t> stage_blocks;
    for (std::size_t i = 0; i < o.iters; ++i) {
        std::vector<pipeline::StageTrace> trace;
        blocked_totals.push_back(blocked_once(&trace));
        for (const auto& t : trace) {
            auto [it, inserted] = stage_samples.try_emplace(t.stage_name);
            if (inserted) order.push_back(t.stage_name);
            it->second.push_back(to_ms(t.wall_time));
            stage_blocks[t.stage_name] = t.blocks_processed;
        }
    }
    for (std::size_t i = 0; i < o.iters; ++i) oracle_totals.push_back(oracle_once());

    const auto sr = storage::storage_report(model.store.catalog, model.store.pages);
    BenchReport report;
    report.config = cfg;
    report.iterations = o.iters;
    report.seed = cfg.seed;
    report.materialize = o.materialize;
    report.timestamp = utc_timestamp();

    EngineReport blocked{"blocked", TimingStats::from_samples(blocked_totals), {}, {}};
    for (const auto& name : order) {
        blocked.stages.push_back({name, TimingStats::from_samples(stage_samples[name]), stage_blocks[name]});
    }
    blocked.model_bytes = {sr.naive_bytes, sr.dedup_bytes, sr.packed_bytes + sr.catalog_bytes};
    const std::size_t raw = cfg.n_blocks * parameters_per_block(cfg) * sizeof(float);
    EngineReport dense{"dense-oracle", TimingStats::from_samples(oracle_totals), {}, {raw, raw, raw}};
    report.engines = {std::move(blocked), std::move(dense)};

    if (!o.report.empty()) write_text(o.report, json(report).dump(2) + "\n");
    out << format_bench_table(report);
    return kExitOk;
}

json storage_json(const storage::PackedStore& store) {
    return json(storage::storage_report(store.catalog, store.pages));
}

struct DedupOpts {
    std::vector<std::string> models;
    double threshold = 0.0;
    std::string report, out;
    std::size_t page_size = storage::kDefaultPageCapacity;
};

int cmd_dedup(const DedupOpts& o, std::ostream& out) {
    std::vector<storage::NamedBlockSet> sets;
    std::size_t block_dim = 0;
    for (std::size_t i = 0; i < o.models.size(); ++i) {
        const auto model = read_model_dir(o.models[i]);
        if (block_dim != 0 && model.config.block_dim != block_dim) {
            throw InvalidArgumentError("models use different block_dim; dedup needs a common tile size");
        }
        block_dim = model.config.block_dim;
        auto s = to_block_sets(model.weights, model.config, "m" + std::to_string(i) + ".");
        std::move(s.begin(), s.end(), std::back_inserter(sets));
    }
    storage::DedupConfig dcfg;
    dcfg.threshold_t = o.threshold;
    const auto dedup = storage::deduplicate(sets, dcfg);
    const auto store = storage::build_packed_store(dedup, o.page_size);
    if (!o.out.empty()) storage::write_store(o.out, store);
    json j = storage_json(store);
    j["threshold"] = o.threshold;
    j["models"] = o.models;
    j["exact_substitutions"] = dedup.exact_substitutions;
    j["near_substitutions"] = dedup.near_substitutions;
    const std::string text = j.dump(2) + "\n";
    if (!o.report.empty()) write_text(o.report, text);
    out << text;
    return kExitOk;
}

struct PackOpts {
    std::string model, report, out;
    std::size_t page_size = storage::kDefaultPageCapacity;
};

int cmd_pack(const PackOpts& o, std::ostream& out) {
    const auto model = read_model_dir(o.model);
    const auto dedup = storage::deduplicate(to_block_sets(model.weights, model.config), storage::DedupConfig{});
    const auto store = storage::build_packed_store(dedup, o.page_size);
    if (!o.out.empty()) storage::write_store(o.out, store);
    const std::string text = storage_json(store).dump(2) + "\n";
    if (!o.report.empty()) write_text(o.report, text);
    out << text;
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"blocked transformer encoder inference over a deduplicated page store", "blockformer"};
    app.require_subcommand(1);

    InitOpts init;
    auto* c_init = app.add_subcommand("init", "create a model directory with random weights");
    c_init->add_option("--config", init.config, "config.json to start from (defaults otherwise)");
    c_init->add_option("--seed", init.seed, "weight seed (overrides the config)");
    c_init->add_option("--out", init.out, "model directory")->required();
    c_init->add_flag("--force", init.force, "overwrite a non-empty directory");
    c_init->add_option("--page-size", init.page_size, "page capacity in bytes");

    InferOpts infer;
    auto* c_infer = app.add_subcommand("infer", "run the encoder on an input matrix file");
    c_infer->add_option("--model", infer.model, "model directory")->required();
    c_infer->add_option("--input", infer.input, "input matrix (text or WMAT)")->required();
    c_infer->add_option("--out", infer.output, "output matrix path")->required();
    c_infer->add_flag("--materialize", infer.materialize, "write every stage output to disk");

    std::string verify_model;
    double tolerance = 1e-3;
    auto* c_verify = app.add_subcommand("verify", "compare the blocked engine with the dense oracle");
    c_verify->add_option("--model", verify_model, "model directory")->required();
    c_verify->add_option("--tolerance", tolerance, "max-abs tolerance")->check(CLI::NonNegativeNumber);

    BenchOpts bench;
    auto* c_bench = app.add_subcommand("bench", "time blocked and dense inference");
    c_bench->add_option("--model", bench.model, "model directory")->required();
    c_bench->add_option("--iters", bench.iters, "timed iterations")->check(CLI::PositiveNumber);
    c_bench->add_option("--report", bench.report, "JSON report path");
    c_bench->add_flag("--materialize", bench.materialize, "materialize every stage");

    DedupOpts dd;
    auto* c_dedup = app.add_subcommand("dedup", "deduplicate the weights of several models");
    c_dedup->add_option("--models", dd.models, "model directories")->required()->expected(1, -1);
    c_dedup->add_option("--threshold", dd.threshold, "near-duplicate MSE threshold")->check(CLI::NonNegativeNumber);
    c_dedup->add_option("--report", dd.report, "JSON report path");
    c_dedup->add_option("--out", dd.out, "write the shared page store here");
    c_dedup->add_option("--page-size", dd.page_size, "page capacity in bytes");

    PackOpts pk;
    auto* c_pack = app.add_subcommand("pack", "repack a model's weights into pages");
    c_pack->add_option("--model", pk.model, "model directory")->required();
    c_pack->add_option("--page-size", pk.page_size, "page capacity in bytes");
    c_pack->add_option("--report", pk.report, "JSON report path");
    c_pack->add_option("--out", pk.out, "write the page store here");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_init->parsed()) return cmd_init(init, out);
        if (c_infer->parsed()) return cmd_infer(infer, out);
        if (c_verify->parsed()) return cmd_verify(verify_model, tolerance, out);
        if (c_bench->parsed()) return cmd_bench(bench, out);
        if (c_dedup->parsed()) return cmd_dedup(dd, out);
        if (c_pack->parsed()) return cmd_pack(pk, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace blockformer::cli
