#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockformer/common/error.hpp"

namespace blockformer::storage {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian append helpers.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

private:
    Bytes& out_;
};

/// Bounds-checked little-endian reader; overruns raise CorruptionError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

    bool expect(std::string_view magic) {
        need(magic.size());
        const bool ok = std::memcmp(in_.data() + pos_, magic.data(), magic.size()) == 0;
        pos_ += magic.size();
        return ok;
    }
    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }

private:
    void need(std::size_t n) const {
        if (remaining() < n) {
            throw CorruptionError("truncated record: need " + std::to_string(n) + " bytes at offset " +
                                  std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace blockformer::storage
