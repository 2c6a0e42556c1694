#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace muse {

enum class ErrorCode {
    // symbolic
    UnbalancedChord,
    MalformedHeader,
    MissingKeyHeader,
    MeasureOverflow,
    PitchOutOfRange,
    UnrepresentableDuration,
    FragmentParseError,
    // symbolic io
    UnsupportedLayout,
    XmlSyntaxError,
    TruncatedFile,
    // audio
    UnsupportedCodec,
    EmptyAudio,
    ShapeMismatch,
    // alignment
    DimensionMismatch,
    NoFeasiblePath,
    InvalidArgument,
    // text / retrieval
    EmptyVocabulary,
    DirectoryUnreadable,
    ProbeTooShort,
    // agent
    BackendTimeout,
    BackendError,
    ModuleFailure,
    UnknownSession,
    // generic
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the engine. The code maps
/// one-to-one onto the error names of the public contracts.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Non-fatal diagnostics (dangling note-ons, rank-deficient PCA, ...).
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
    if (sink) sink->push_back(std::move(message));
}

}  // namespace muse
