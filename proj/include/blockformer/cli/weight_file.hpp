#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "blockformer/common/dense_matrix.hpp"

namespace blockformer::cli {

/// Text form: "rows cols" on the first line, then one line of cols decimal
/// floats per row. Values are printed shortest-round-trip, so text files
/// reproduce the exact bits.
std::string format_matrix_text(const DenseMatrix& m);
DenseMatrix parse_matrix_text(std::string_view text);

/// Binary form: "WMAT" | rows u32 | cols u32 | rows*cols little-endian f32.
std::string format_matrix_binary(const DenseMatrix& m);
DenseMatrix parse_matrix_binary(std::string_view bytes);

enum class MatrixFormat { kText, kBinary };

/// Detects the format from the magic bytes. Dims must match the payload and
/// every value must be finite (CorruptionError otherwise).
DenseMatrix read_matrix_file(const std::filesystem::path& path, MatrixFormat* detected = nullptr);
void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m, MatrixFormat format);

}  // namespace blockformer::cli
