#include "muse/common/error.hpp"

namespace muse {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnbalancedChord: return "UnbalancedChord";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::MissingKeyHeader: return "MissingKeyHeader";
        case ErrorCode::MeasureOverflow: return "MeasureOverflow";
        case ErrorCode::PitchOutOfRange: return "PitchOutOfRange";
        case ErrorCode::UnrepresentableDuration: return "UnrepresentableDuration";
        case ErrorCode::FragmentParseError: return "FragmentParseError";
        case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
        case ErrorCode::XmlSyntaxError: return "XmlSyntaxError";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::UnsupportedCodec: return "UnsupportedCodec";
        case ErrorCode::EmptyAudio: return "EmptyAudio";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NoFeasiblePath: return "NoFeasiblePath";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
        case ErrorCode::DirectoryUnreadable: return "DirectoryUnreadable";
        case ErrorCode::ProbeTooShort: return "ProbeTooShort";
        case ErrorCode::BackendTimeout: return "BackendTimeout";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::ModuleFailure: return "ModuleFailure";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace muse
