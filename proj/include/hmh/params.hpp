#pragma once

#include <cstdint>

#include "hmh/errors.hpp"

namespace hmh {

/// Extendable-output functions usable for input randomization. The id is
/// persisted in digest files and public-parameter files.
enum class XofId : std::uint8_t {
    Shake256 = 1,
};

/// Public hash parameters. Every digest is bound to the Params that produced
/// it; values under different Params never interoperate.
///
/// Constraints enforced at construction:
///   - 1 <= d <= 32 so component arithmetic fits 64-bit accumulators,
///   - 1 <= n <= 65535 so the expand domain tag can carry n in two bytes,
///   - n*d divisible by 8 so a digest serializes to whole bytes.
class Params {
  public:
    Params(std::uint32_t d, std::uint32_t n, XofId xof_id = XofId::Shake256)
        : d_(d), n_(n), xof_id_(xof_id) {
        if (d < 1 || d > 32) raise(ErrorCode::Config, "d must be in [1,32]");
        if (n < 1 || n > 65535) raise(ErrorCode::Config, "n must be in [1,65535]");
        if ((std::uint64_t(n) * d) % 8 != 0) raise(ErrorCode::Config, "n*d must be a multiple of 8");
        if (xof_id != XofId::Shake256) raise(ErrorCode::Config, "unknown xof id");
    }

    std::uint32_t d() const noexcept { return d_; }
    std::uint32_t n() const noexcept { return n_; }
    XofId xof_id() const noexcept { return xof_id_; }

    /// Modulus q = 2^d. Never stored, always derived.
    std::uint64_t q() const noexcept { return std::uint64_t(1) << d_; }

    /// Component mask, q - 1. Reduction mod q is a bitwise AND.
    std::uint32_t component_mask() const noexcept {
        return d_ == 32 ? 0xffffffffu : (std::uint32_t(1) << d_) - 1;
    }

    /// Serialized digest size in bytes: n*d/8.
    std::size_t digest_bytes() const noexcept { return std::size_t(n_) * d_ / 8; }

    friend bool operator==(const Params&, const Params&) = default;

  private:
    std::uint32_t d_;
    std::uint32_t n_;
    XofId xof_id_;
};

inline void require_same_params(const Params& a, const Params& b) {
    if (!(a == b)) raise(ErrorCode::IncompatibleParams, "operands bound to different Params");
}

}  // namespace hmh
