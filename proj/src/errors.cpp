#include "hmh/errors.hpp"

namespace hmh {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config: return "config-error";
        case ErrorCode::Io: return "io-error";
        case ErrorCode::Parse: return "parse-error";
        case ErrorCode::IncompatibleParams: return "incompatible-parameters";
        case ErrorCode::MalformedDigest: return "malformed-digest";
        case ErrorCode::InvalidIndex: return "invalid-index";
        case ErrorCode::MalformedDelta: return "malformed-delta";
        case ErrorCode::StaleDelta: return "stale-delta";
        case ErrorCode::MissingRow: return "missing-row";
        case ErrorCode::DuplicateIndex: return "duplicate-index";
        case ErrorCode::UnsupportedScheme: return "unsupported-scheme";
        case ErrorCode::MalformedInput: return "malformed-input";
        case ErrorCode::InvalidRange: return "invalid-range";
        case ErrorCode::UnknownVersion: return "unknown-version";
        case ErrorCode::LogTruncated: return "log-truncated";
        case ErrorCode::OutOfOrder: return "out-of-order";
        case ErrorCode::TamperDetected: return "tamper-detected";
        case ErrorCode::CorruptDelta: return "corrupt-delta";
    }
    return "unknown-error";
}

}  // namespace hmh
