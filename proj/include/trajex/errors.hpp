#pragma once

#include <stdexcept>
#include <string>

namespace trajex {

enum class ErrorCode {
    ConfigParse,
    UnknownKey,
    InvalidValue,
    MissingDirectory,
    TooFewFrames,
    UndecodableImage,
    BadDimensions,
    NoHandFrameFound,
    SeedFrameOutOfRange,
    Backend,
    ResponseParse,
    Validation,
    UnknownTemplate,
    FrameTooSmall,
    FrameMismatch,
    TrackSetMismatch,
    WristTrackMissing,
    WristTrackDropped,
    TooFewVisibleSamples,
    SchemaVersionUnsupported,
    InvariantViolation,
    DimensionMismatch,
    Io,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::MissingDirectory: return "MissingDirectory";
        case ErrorCode::TooFewFrames: return "TooFewFrames";
        case ErrorCode::UndecodableImage: return "UndecodableImage";
        case ErrorCode::BadDimensions: return "BadDimensions";
        case ErrorCode::NoHandFrameFound: return "NoHandFrameFound";
        case ErrorCode::SeedFrameOutOfRange: return "SeedFrameOutOfRange";
        case ErrorCode::Backend: return "BackendError";
        case ErrorCode::ResponseParse: return "ParseError";
        case ErrorCode::Validation: return "ValidationError";
        case ErrorCode::UnknownTemplate: return "UnknownTemplate";
        case ErrorCode::FrameTooSmall: return "FrameTooSmall";
        case ErrorCode::FrameMismatch: return "FrameMismatch";
        case ErrorCode::TrackSetMismatch: return "TrackSetMismatch";
        case ErrorCode::WristTrackMissing: return "WristTrackMissing";
        case ErrorCode::WristTrackDropped: return "WristTrackDropped";
        case ErrorCode::TooFewVisibleSamples: return "TooFewVisibleSamples";
        case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::Io: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Backend failure that may succeed on retry (HTTP 429 / 5xx, timeouts).
class TransientBackendError : public Error {
public:
    TransientBackendError(int status, const std::string& what)
        : Error(ErrorCode::Backend, what), status_(status) {}

    int status() const { return status_; }

private:
    int status_;
};

// Process exit codes, stable across releases. Documented in the README.
inline int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigParse:
        case ErrorCode::UnknownKey:
        case ErrorCode::InvalidValue: return 2;
        case ErrorCode::MissingDirectory:
        case ErrorCode::TooFewFrames:
        case ErrorCode::UndecodableImage:
        case ErrorCode::BadDimensions:
        case ErrorCode::FrameTooSmall: return 3;
        case ErrorCode::NoHandFrameFound:
        case ErrorCode::SeedFrameOutOfRange: return 4;
        case ErrorCode::Backend: return 5;
        case ErrorCode::ResponseParse: return 6;
        case ErrorCode::Validation:
        case ErrorCode::UnknownTemplate: return 7;
        case ErrorCode::FrameMismatch:
        case ErrorCode::TrackSetMismatch: return 8;
        case ErrorCode::WristTrackMissing:
        case ErrorCode::WristTrackDropped:
        case ErrorCode::TooFewVisibleSamples: return 9;
        case ErrorCode::SchemaVersionUnsupported:
        case ErrorCode::InvariantViolation:
        case ErrorCode::DimensionMismatch: return 10;
        case ErrorCode::Io: return 11;
    }
    return 1;
}

}  // namespace trajex
