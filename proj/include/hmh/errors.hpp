#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmh {

/// Stable error classification shared by the library, the wire protocol and
/// the CLI exit-code mapping.
enum class ErrorCode {
    Config,              // bad configuration / unsupported preset
    Io,                  // file system failure
    Parse,               // malformed serialized input (wire or file)
    IncompatibleParams,  // mixing digests produced under different Params
    MalformedDigest,     // digest bytes of wrong length
    InvalidIndex,        // row index 0
    MalformedDelta,      // delta missing a payload its kind requires
    StaleDelta,          // old payload does not match the row store
    MissingRow,          // modify/delete of an absent row
    DuplicateIndex,      // insert over an existing row
    UnsupportedScheme,   // unknown signature scheme id
    MalformedInput,      // key/signature bytes of impossible shape
    InvalidRange,        // get_updates with w <= v
    UnknownVersion,      // requested version beyond the distributor's head
    LogTruncated,        // requested deltas compacted away; full resync needed
    OutOfOrder,          // delta batch does not continue the local version
    TamperDetected,      // digest/signature verification failed
    CorruptDelta,        // verified batch failed row-store preconditions
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace hmh
