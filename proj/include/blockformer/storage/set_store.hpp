#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "blockformer/storage/byte_io.hpp"
#include "blockformer/tensor/blocked_matrix.hpp"

namespace blockformer::storage {

/// "TSET" | version u8 | batch u32 | rows u32 | cols u32 | block_dim u32 |
/// batch * tiles TBLK records, items in order, tiles row-major.
Bytes encode_batched(const BatchedTensor& t);
BatchedTensor decode_batched(std::span<const std::uint8_t> bytes);

/// Destination of the intermediate writer. Set names are write-once.
class SetStore {
public:
    virtual ~SetStore() = default;
    /// Throws NameCollisionError if the name exists, IoError when the store
    /// is full or unwritable.
    virtual void write(const std::string& name, const BatchedTensor& value) = 0;
    virtual BatchedTensor read(const std::string& name) const = 0;
    virtual bool contains(const std::string& name) const = 0;
};

/// Keeps encoded sets in memory, optionally with a byte budget.
class MemorySetStore final : public SetStore {
public:
    explicit MemorySetStore(std::optional<std::size_t> capacity_bytes = std::nullopt)
        : capacity_(capacity_bytes) {}

    void write(const std::string& name, const BatchedTensor& value) override;
    BatchedTensor read(const std::string& name) const override;
    bool contains(const std::string& name) const override { return sets_.count(name) != 0; }
    std::size_t bytes_used() const { return used_; }

private:
    std::optional<std::size_t> capacity_;
    std::size_t used_ = 0;
    std::map<std::string, Bytes> sets_;
};

/// One <name>.set file per set under a directory.
class DirectorySetStore final : public SetStore {
public:
    explicit DirectorySetStore(std::filesystem::path dir);

    void write(const std::string& name, const BatchedTensor& value) override;
    BatchedTensor read(const std::string& name) const override;
    bool contains(const std::string& name) const override;

private:
    std::filesystem::path path_for(const std::string& name) const;
    std::filesystem::path dir_;
};

}  // namespace blockformer::storage
