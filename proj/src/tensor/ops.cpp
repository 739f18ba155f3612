#include "blockformer/tensor/ops.hpp"

#include <cmath>
#include <string>

#include "blockformer/common/error.hpp"
#include "blockformer/tensor/kernels.hpp"
#include "blockformer/tensor/parallel.hpp"

namespace blockformer {

namespace {

std::string dims(const BlockedMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "/bd" +
           std::to_string(m.block_dim());
}

BlockKey key_of(std::size_t bi, std::size_t bj) {
    return {static_cast<std::uint32_t>(bi), static_cast<std::uint32_t>(bj)};
}

TensorBlock empty_tile(const BlockedMatrix& m, std::size_t bi, std::size_t bj) {
    return TensorBlock(key_of(bi, bj), static_cast<std::uint16_t>(m.tile_rows(bi)),
                       static_cast<std::uint16_t>(m.tile_cols(bj)));
}

void require_finite(const TensorBlock& b, const char* op) {
    for (float v : b.data) {
        if (!std::isfinite(v)) {
            throw NumericOverflowError(std::string(op) + " produced a non-finite value in block (" +
                                       std::to_string(b.block_row) + ", " +
                                       std::to_string(b.block_col) + ")");
        }
    }
}

void require_same_shape(const BlockedMatrix& a, const BlockedMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.block_dim() != b.block_dim()) {
        throw ShapeError(std::string(op) + ": operands " + dims(a) + " and " + dims(b) +
                         " differ in dims or block_dim");
    }
}

/// Element gather into a fresh matrix; src(i, j) gives the source value.
template <typename Source>
BlockedMatrix gather(std::size_t rows, std::size_t cols, std::size_t block_dim, Source&& src) {
    BlockedMatrix out = BlockedMatrix::zeros(rows, cols, block_dim);
    for (std::size_t bi = 0; bi < out.block_rows(); ++bi) {
        for (std::size_t bj = 0; bj < out.block_cols(); ++bj) {
            TensorBlock& t = out.block(bi, bj);
            for (std::size_t r = 0; r < t.rows; ++r) {
                for (std::size_t c = 0; c < t.cols; ++c) {
                    t.at(r, c) = src(bi * block_dim + r, bj * block_dim + c);
                }
            }
        }
    }
    return out;
}

}  // namespace

BlockedMatrix partition(std::span<const float> data, std::size_t rows, std::size_t cols,
                        std::size_t block_dim) {
    if (block_dim == 0) throw InvalidArgumentError("partition: block_dim must be at least 1");
    if (rows == 0 || cols == 0) throw InvalidArgumentError("partition: zero matrix dimension");
    if (data.size() != rows * cols) {
        throw InvalidArgumentError("partition: " + std::to_string(data.size()) +
                                   " values for a " + std::to_string(rows) + "x" +
                                   std::to_string(cols) + " matrix");
    }
    BlockedMatrix out(rows, cols, block_dim);
    for (std::size_t bi = 0; bi < out.block_rows(); ++bi) {
        for (std::size_t bj = 0; bj < out.block_cols(); ++bj) {
            TensorBlock t = empty_tile(out, bi, bj);
            for (std::size_t r = 0; r < t.rows; ++r) {
                const float* src = data.data() + (bi * block_dim + r) * cols + bj * block_dim;
                std::copy(src, src + t.cols, t.data.begin() + r * t.cols);
            }
            out.put(std::move(t));
        }
    }
    return out;
}

BlockedMatrix partition(const DenseMatrix& dense, std::size_t block_dim) {
    return partition(dense.data, dense.rows, dense.cols, block_dim);
}

DenseMatrix reassemble(const BlockedMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    const std::size_t bd = m.block_dim();
    for (std::size_t bi = 0; bi < m.block_rows(); ++bi) {
        for (std::size_t bj = 0; bj < m.block_cols(); ++bj) {
            const TensorBlock& t = m.block(bi, bj);
            if (t.rows != m.tile_rows(bi) || t.cols != m.tile_cols(bj)) {
                throw CorruptionError("reassemble: block (" + std::to_string(bi) + ", " +
                                      std::to_string(bj) + ") has wrong dims");
            }
            for (std::size_t r = 0; r < t.rows; ++r) {
                std::copy(t.data.begin() + r * t.cols, t.data.begin() + (r + 1) * t.cols,
                          out.data.begin() + (bi * bd + r) * m.cols() + bj * bd);
            }
        }
    }
    return out;
}

BlockedMatrix block_matmul(const BlockedMatrix& a, const BlockedMatrix& b) {
    if (a.cols() != b.rows() || a.block_dim() != b.block_dim()) {
        throw ShapeError("block_matmul: cannot multiply " + dims(a) + " by " + dims(b));
    }
    const auto& k = kernels::active();
    BlockedMatrix out(a.rows(), b.cols(), a.block_dim());
    const std::size_t brows = out.block_rows();
    const std::size_t bcols = out.block_cols();
    std::vector<TensorBlock> tiles(brows * bcols);

    parallel_for(tiles.size(), [&](std::size_t idx) {
        const std::size_t bi = idx / bcols;
        const std::size_t bj = idx % bcols;
        TensorBlock t = empty_tile(out, bi, bj);
        std::vector<double> acc(t.size(), 0.0);
        for (std::size_t kk = 0; kk < a.block_cols(); ++kk) {
            const TensorBlock& lhs = a.block(bi, kk);
            const TensorBlock& rhs = b.block(kk, bj);
            k.matmul_accumulate(lhs.data.data(), rhs.data.data(), acc.data(), t.rows, lhs.cols,
                                t.cols);
        }
        k.narrow(acc.data(), t.data.data(), t.size());
        require_finite(t, "block_matmul");
        tiles[idx] = std::move(t);
    });

    for (auto& t : tiles) out.put(std::move(t));
    return out;
}

BlockedMatrix block_transpose(const BlockedMatrix& a) {
    BlockedMatrix out(a.cols(), a.rows(), a.block_dim());
    for (const auto& [key, t] : a.blocks()) {
        TensorBlock tt(BlockKey{key.col, key.row}, t.cols, t.rows);
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) tt.at(c, r) = t.at(r, c);
        }
        out.put(std::move(tt));
    }
    out.validate();
    return out;
}

BlockedMatrix elementwise_add(const BlockedMatrix& a, const BlockedMatrix& b) {
    require_same_shape(a, b, "elementwise_add");
    const auto& k = kernels::active();
    BlockedMatrix out(a.rows(), a.cols(), a.block_dim());
    // Join on key: every left tile probes the right relation for its partner.
    for (const auto& [key, lhs] : a.blocks()) {
        const TensorBlock& rhs = b.block(key);
        TensorBlock t(key, lhs.rows, lhs.cols);
        k.add(lhs.data.data(), rhs.data.data(), t.data.data(), t.size());
        require_finite(t, "elementwise_add");
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

BlockedMatrix elementwise_map(const BlockedMatrix& a, ElementwiseFn f) {
    const auto& k = kernels::active();
    BlockedMatrix out(a.rows(), a.cols(), a.block_dim());
    for (const auto& [key, src] : a.blocks()) {
        TensorBlock t(key, src.rows, src.cols);
        const float* in = src.data.data();
        float* o = t.data.data();
        switch (f.kind) {
            case ElementwiseFn::Kind::kExp:
                for (std::size_t i = 0; i < t.size(); ++i) o[i] = std::exp(in[i]);
                break;
            case ElementwiseFn::Kind::kRelu:
                k.relu(in, o, t.size());
                break;
            case ElementwiseFn::Kind::kScale:
                k.scale(in, f.constant, o, t.size());
                break;
            case ElementwiseFn::Kind::kAddConst:
                k.add_scalar(in, f.constant, o, t.size());
                break;
        }
        require_finite(t, "elementwise_map");
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

BlockedMatrix broadcast_row_add(const BlockedMatrix& a, std::span<const float> bias) {
    if (bias.size() != a.cols()) {
        throw ShapeError("broadcast_row_add: bias has " + std::to_string(bias.size()) +
                         " entries for " + std::to_string(a.cols()) + " columns");
    }
    const auto& k = kernels::active();
    BlockedMatrix out(a.rows(), a.cols(), a.block_dim());
    for (const auto& [key, src] : a.blocks()) {
        TensorBlock t(key, src.rows, src.cols);
        const float* b = bias.data() + static_cast<std::size_t>(key.col) * a.block_dim();
        for (std::size_t r = 0; r < t.rows; ++r) {
            k.add(src.data.data() + r * t.cols, b, t.data.data() + r * t.cols, t.cols);
        }
        require_finite(t, "broadcast_row_add");
        out.put(std::move(t));
    }
    out.validate();
    return out;
}

BlockedMatrix slice_columns(const BlockedMatrix& a, std::size_t begin, std::size_t count) {
    if (count == 0 || begin + count > a.cols()) {
        throw ShapeError("slice_columns: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + dims(a));
    }
    return gather(a.rows(), count, a.block_dim(),
                  [&](std::size_t i, std::size_t j) { return a.at(i, begin + j); });
}

BlockedMatrix concat_columns(std::span<const BlockedMatrix> parts) {
    if (parts.empty()) throw ShapeError("concat_columns: no parts");
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts.front().rows() || p.block_dim() != parts.front().block_dim()) {
            throw ShapeError("concat_columns: parts disagree on rows or block_dim");
        }
        offsets.push_back(total);
        total += p.cols();
    }
    return gather(parts.front().rows(), total, parts.front().block_dim(),
                  [&](std::size_t i, std::size_t j) {
                      std::size_t p = offsets.size() - 1;
                      while (offsets[p] > j) --p;
                      return parts[p].at(i, j - offsets[p]);
                  });
}

}  // namespace blockformer
