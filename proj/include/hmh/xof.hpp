#pragma once

#include <cstddef>

#include "hmh/bytes.hpp"
#include "hmh/params.hpp"

namespace hmh {

/// Runs the extendable-output function identified by `id` over `input` and
/// returns exactly `out_len` bytes.
Bytes xof(XofId id, BytesView input, std::size_t out_len);

/// SHAKE-256 convenience entry used for key derivation and fingerprints.
Bytes shake256(BytesView input, std::size_t out_len);

}  // namespace hmh
