#include "blockformer/storage/block_codec.hpp"

#include <zlib.h>

#include <algorithm>

namespace blockformer::storage {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = ::crc32(crc, bytes.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

void serialize_block(const TensorBlock& b, Bytes& out) {
    const std::size_t start = out.size();
    out.reserve(start + serialized_block_size(b.rows, b.cols));
    ByteWriter w(out);
    w.raw("TBLK");
    w.u8(kBlockFormatVersion);
    w.u32(b.block_row);
    w.u32(b.block_col);
    w.u16(b.rows);
    w.u16(b.cols);
    for (float v : b.data) w.f32(v);
    w.u32(crc32(std::span(out).subspan(start)));
}

Bytes serialize_block(const TensorBlock& b) {
    Bytes out;
    serialize_block(b, out);
    return out;
}

TensorBlock deserialize_block(std::span<const std::uint8_t> in, std::size_t* consumed) {
    ByteReader r(in);
    if (!r.expect("TBLK")) throw CorruptionError("tensor block: bad magic");
    const std::uint8_t version = r.u8();
    if (version != kBlockFormatVersion) {
        throw CorruptionError("tensor block: unsupported version " + std::to_string(version));
    }
    TensorBlock b;
    b.block_row = r.u32();
    b.block_col = r.u32();
    b.rows = r.u16();
    b.cols = r.u16();
    if (b.rows == 0 || b.cols == 0) throw CorruptionError("tensor block: zero dimension");
    b.data.resize(b.size());
    for (float& v : b.data) v = r.f32();
    const std::size_t body = r.position();
    const std::uint32_t stored = r.u32();
    if (stored != crc32(in.first(body))) {
        throw CorruptionError("tensor block (" + std::to_string(b.block_row) + ", " +
                              std::to_string(b.block_col) + "): CRC mismatch");
    }
    if (consumed) *consumed = r.position();
    return b;
}

}  // namespace blockformer::storage
