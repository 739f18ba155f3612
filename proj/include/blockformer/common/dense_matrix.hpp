#pragma once

#include <cstddef>
#include <cstring>
#include <vector>

#include "blockformer/common/error.hpp"

namespace blockformer {

/// Plain row-major float matrix. Storage only: arithmetic on dense matrices
/// lives in the reference oracle, kernels for blocked matrices in tensor/.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<float> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) {
            throw ShapeError("dense matrix payload has " + std::to_string(data.size()) +
                             " values, expected " + std::to_string(rows * cols));
        }
    }

    float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Bitwise equality; distinguishes -0.0 from 0.0 and compares NaN payloads.
inline bool bit_equal(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols &&
           (a.data.empty() ||
            std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

}  // namespace blockformer
