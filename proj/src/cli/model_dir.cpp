#include "blockformer/cli/model_dir.hpp"

#include <fstream>
#include <sstream>

#include "blockformer/cli/weight_file.hpp"
#include "blockformer/common/error.hpp"

namespace blockformer::cli {

namespace fs = std::filesystem;

void write_model_dir(const fs::path& dir, const ModelConfig& cfg, const EncoderWeights& w,
                     std::size_t page_capacity) {
    std::error_code ec;
    fs::create_directories(dir / "weights", ec);
    if (ec) throw IoError("cannot create '" + (dir / "weights").string() + "': " + ec.message());
    {
        std::ofstream out(dir / "config.json", std::ios::trunc);
        if (!out) throw IoError("cannot write config.json in '" + dir.string() + "'");
        out << nlohmann::json(cfg).dump(2) << "\n";
    }
    for (const auto& nw : to_named(w, cfg)) {
        write_matrix_file(dir / "weights" / (nw.name + ".wmat"), nw.value, MatrixFormat::kBinary);
    }
    const auto sets = to_block_sets(w, cfg);
    const auto dedup = storage::deduplicate(sets, storage::DedupConfig{});
    storage::write_store(dir / "store", storage::build_packed_store(dedup, page_capacity));
}

ModelConfig read_model_config(const fs::path& dir) {
    std::ifstream in(dir / "config.json");
    if (!in) throw IoError("no config.json in '" + dir.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config.json: " + std::string(e.what()));
    }
    return j.get<ModelConfig>();
}

ModelDirectory read_model_dir(const fs::path& dir) {
    ModelDirectory m;
    m.config = read_model_config(dir);
    m.store = storage::load_store(dir / "store");
    m.weights = load_weights(m.store.catalog, m.store.pages, m.config);
    return m;
}

EncoderWeights read_weight_files(const fs::path& dir, const ModelConfig& cfg) {
    std::vector<NamedWeight> named;
    for (const auto& name : weight_set_names(cfg)) {
        named.push_back({name, read_matrix_file(dir / "weights" / (name + ".wmat"))});
    }
    return from_named(named, cfg);
}

}  // namespace blockformer::cli
