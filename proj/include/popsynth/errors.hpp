#pragma once

#include <stdexcept>
#include <string>

namespace popsynth {

enum class ErrorCode {
    MissingColumn,
    BadValue,
    OutOfRange,
    IoFailure,
    EmptyTable,
    EmptyInput,
    EmptyBatch,
    EmptyData,
    EmptyList,
    BadK,
    SchemaMismatch,
    ShapeMismatch,
    LengthMismatch,
    DegenerateBlock,
    TooFewSamples,
    VersionMismatch,
    SchemaFingerprintMismatch,
    CorruptFile,
    IncompleteReport,
    BadConfig,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::BadValue: return "BadValue";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::EmptyData: return "EmptyData";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::BadK: return "BadK";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateBlock: return "DegenerateBlock";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::SchemaFingerprintMismatch: return "SchemaFingerprintMismatch";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::IncompleteReport: return "IncompleteReport";
        case ErrorCode::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace popsynth
