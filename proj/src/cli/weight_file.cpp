#include "blockformer/cli/weight_file.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blockformer/common/error.hpp"
#include "blockformer/storage/byte_io.hpp"

namespace blockformer::cli {

namespace {

void require_finite(const DenseMatrix& m, const char* what) {
    for (float v : m.data) {
        if (!std::isfinite(v)) throw CorruptionError(std::string(what) + ": non-finite value");
    }
}

std::string_view next_token(std::string_view text, std::size_t& pos) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return text.substr(start, pos - start);
}

template <typename T>
T parse_number(std::string_view token, const char* what) {
    T value{};
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || end != token.data() + token.size()) {
        throw CorruptionError(std::string("matrix text: bad ") + what + " '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace

std::string format_matrix_text(const DenseMatrix& m) {
    std::string out = std::to_string(m.rows) + " " + std::to_string(m.cols) + "\n";
    char buf[32];
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
            if (j) out += ' ';
            out.append(buf, end);
        }
        out += '\n';
    }
    return out;
}

DenseMatrix parse_matrix_text(std::string_view text) {
    std::size_t pos = 0;
    const auto rows = parse_number<std::size_t>(next_token(text, pos), "row count");
    const auto cols = parse_number<std::size_t>(next_token(text, pos), "column count");
    if (rows == 0 || cols == 0) throw CorruptionError("matrix text: zero dimension");
    DenseMatrix m(rows, cols);
    for (float& v : m.data) {
        const auto token = next_token(text, pos);
        if (token.empty()) {
            throw CorruptionError("matrix text: declared " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " but payload is short");
        }
        v = parse_number<float>(token, "value");
    }
    if (!next_token(text, pos).empty()) throw CorruptionError("matrix text: payload longer than declared dims");
    require_finite(m, "matrix text");
    return m;
}

std::string format_matrix_binary(const DenseMatrix& m) {
    storage::Bytes out;
    storage::ByteWriter w(out);
    w.raw("WMAT");
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.u32(static_cast<std::uint32_t>(m.cols));
    for (float v : m.data) w.f32(v);
    return std::string(out.begin(), out.end());
}

DenseMatrix parse_matrix_binary(std::string_view bytes) {
    storage::ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    if (!r.expect("WMAT")) throw CorruptionError("matrix binary: bad magic");
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0) throw CorruptionError("matrix binary: zero dimension");
    if (r.remaining() != std::size_t{4} * rows * cols) {
        throw CorruptionError("matrix binary: declared " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " but payload has " +
                              std::to_string(r.remaining()) + " bytes");
    }
    DenseMatrix m(rows, cols);
    for (float& v : m.data) v = r.f32();
    require_finite(m, "matrix binary");
    return m;
}

DenseMatrix read_matrix_file(const std::filesystem::path& path, MatrixFormat* detected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    const bool binary = data.rfind("WMAT", 0) == 0;
    if (detected) *detected = binary ? MatrixFormat::kBinary : MatrixFormat::kText;
    return binary ? parse_matrix_binary(data) : parse_matrix_text(data);
}

void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m, MatrixFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out << (format == MatrixFormat::kBinary ? format_matrix_binary(m) : format_matrix_text(m));
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace blockformer::cli
