#include "blockformer/storage/set_store.hpp"

#include "blockformer/common/error.hpp"
#include "blockformer/storage/block_codec.hpp"
#include "blockformer/storage/page_store.hpp"

namespace blockformer::storage {

namespace {

constexpr std::uint8_t kSetFormatVersion = 1;

}  // namespace

Bytes encode_batched(const BatchedTensor& t) {
    t.validate();
    Bytes out;
    ByteWriter w(out);
    w.raw("TSET");
    w.u8(kSetFormatVersion);
    w.u32(static_cast<std::uint32_t>(t.batch()));
    const bool empty = t.items.empty();
    w.u32(empty ? 0 : static_cast<std::uint32_t>(t.items.front().rows()));
    w.u32(empty ? 0 : static_cast<std::uint32_t>(t.items.front().cols()));
    w.u32(empty ? 0 : static_cast<std::uint32_t>(t.items.front().block_dim()));
    for (const auto& m : t.items) {
        m.validate();
        for (const auto& [key, tile] : m.blocks()) serialize_block(tile, out);
    }
    return out;
}

BatchedTensor decode_batched(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (!r.expect("TSET")) throw CorruptionError("tensor set: bad magic");
    if (r.u8() != kSetFormatVersion) throw CorruptionError("tensor set: unsupported version");
    const std::uint32_t batch = r.u32();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint32_t block_dim = r.u32();
    std::size_t pos = r.position();
    BatchedTensor out;
    for (std::uint32_t b = 0; b < batch; ++b) {
        BlockedMatrix m(rows, cols, block_dim);
        for (std::size_t n = 0; n < m.expected_block_count(); ++n) {
            std::size_t consumed = 0;
            TensorBlock t = deserialize_block(bytes.subspan(pos), &consumed);
            pos += consumed;
            try {
                m.put(std::move(t));
            } catch (const ShapeError& e) {
                throw CorruptionError(std::string("tensor set: ") + e.what());
            }
        }
        m.validate();
        out.items.push_back(std::move(m));
    }
    if (pos != bytes.size()) throw CorruptionError("tensor set: trailing bytes");
    return out;
}

void MemorySetStore::write(const std::string& name, const BatchedTensor& value) {
    if (contains(name)) throw NameCollisionError("set '" + name + "' already materialized");
    Bytes encoded = encode_batched(value);
    if (capacity_ && used_ + encoded.size() > *capacity_) {
        throw IoError("store full: writing '" + name + "' needs " + std::to_string(encoded.size()) +
                      " bytes, " + std::to_string(*capacity_ - used_) + " left");
    }
    used_ += encoded.size();
    sets_.emplace(name, std::move(encoded));
}

BatchedTensor MemorySetStore::read(const std::string& name) const {
    auto it = sets_.find(name);
    if (it == sets_.end()) throw IoError("set '" + name + "' not in store");
    return decode_batched(it->second);
}

DirectorySetStore::DirectorySetStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create '" + dir_.string() + "': " + ec.message());
}

std::filesystem::path DirectorySetStore::path_for(const std::string& name) const {
    std::string file;
    for (char c : name) file += (c == '/' || c == '\\') ? '_' : c;
    return dir_ / (file + ".set");
}

bool DirectorySetStore::contains(const std::string& name) const {
    return std::filesystem::exists(path_for(name));
}

void DirectorySetStore::write(const std::string& name, const BatchedTensor& value) {
    if (contains(name)) throw NameCollisionError("set '" + name + "' already materialized");
    write_file(path_for(name), encode_batched(value));
}

BatchedTensor DirectorySetStore::read(const std::string& name) const {
    return decode_batched(read_file(path_for(name)));
}

}  // namespace blockformer::storage
