#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "blockformer/common/dense_matrix.hpp"
#include "blockformer/common/random.hpp"

namespace blockformer::testing {

inline DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed, float lo = -1.0f,
                                float hi = 1.0f) {
    DenseMatrix m(rows, cols);
    Rng rng(seed);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
    }
    return m;
}

/// Fresh directory under the system temp dir, removed when the object dies.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("blockformer-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace blockformer::testing
