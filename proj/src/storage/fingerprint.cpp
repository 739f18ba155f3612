#include "blockformer/storage/fingerprint.hpp"

#include <bit>

#include "blockformer/common/random.hpp"

namespace blockformer::storage {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline void fnv_word(std::uint64_t& h, std::uint32_t word) {
    for (int i = 0; i < 4; ++i) {
        h ^= (word >> (8 * i)) & 0xFFu;
        h *= kFnvPrime;
    }
}

}  // namespace

std::uint64_t fingerprint_block(const TensorBlock& b) {
    std::uint64_t h = kFnvOffset;
    fnv_word(h, (static_cast<std::uint32_t>(b.rows) << 16) | b.cols);
    for (float v : b.data) fnv_word(h, std::bit_cast<std::uint32_t>(v));
    return mix64(h);
}

}  // namespace blockformer::storage
