#pragma once

#include <stdexcept>
#include <string>

namespace blockformer {

enum class ErrorKind {
    kInvalidArgument,
    kShape,
    kCorruption,
    kNumericOverflow,
    kStageFailure,
    kNameCollision,
    kWiring,
    kIo,
    kConfig,
};

/// Base of every exception thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define BLOCKFORMER_DEFINE_ERROR(Name, Kind)                                   \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

BLOCKFORMER_DEFINE_ERROR(InvalidArgumentError, kInvalidArgument)
BLOCKFORMER_DEFINE_ERROR(ShapeError, kShape)
BLOCKFORMER_DEFINE_ERROR(CorruptionError, kCorruption)
BLOCKFORMER_DEFINE_ERROR(NumericOverflowError, kNumericOverflow)
BLOCKFORMER_DEFINE_ERROR(NameCollisionError, kNameCollision)
BLOCKFORMER_DEFINE_ERROR(WiringError, kWiring)
BLOCKFORMER_DEFINE_ERROR(IoError, kIo)
BLOCKFORMER_DEFINE_ERROR(ConfigError, kConfig)

#undef BLOCKFORMER_DEFINE_ERROR

/// Raised when a pipeline stage fails; carries the stage name and the underlying cause.
class StageFailureError : public Error {
public:
    StageFailureError(std::string stage, const std::string& cause)
        : Error(ErrorKind::kStageFailure, "stage '" + stage + "' failed: " + cause),
          stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace blockformer
