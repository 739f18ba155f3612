#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blockformer/common/dense_matrix.hpp"
#include "blockformer/common/error.hpp"
#include "blockformer/model/config.hpp"

namespace blockformer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

inline constexpr std::uint64_t kVerifyInputSeed = 7;

int exit_code_for(ErrorKind kind);

/// Stacked input (batch * seq_len rows, embed_dim cols) of standard normals.
DenseMatrix random_input(const ModelConfig& cfg, std::uint64_t seed);

/// Runs one CLI invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blockformer::cli
