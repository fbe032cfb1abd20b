#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hmh/bytes.hpp"
#include "hmh/params.hpp"

namespace hmh {

/// An element of Z_q^n bound to the Params it was produced under: n
/// components, each reduced mod q = 2^d. Component-wise addition mod q makes
/// the value set a commutative group, which is what lets digests be updated
/// incrementally instead of recomputed.
///
/// Values are immutable from the caller's point of view; all operations
/// return new vectors. Any value may be shared freely across threads.
class HashVector {
  public:
    /// The zero vector (additive identity) for `params`.
    static HashVector zero(const Params& params);

    /// Builds a vector from raw components; each is reduced mod q.
    static HashVector from_components(const Params& params, std::vector<std::uint32_t> components);

    const Params& params() const noexcept { return params_; }
    std::span<const std::uint32_t> components() const noexcept { return components_; }
    std::uint32_t component(std::size_t i) const { return components_.at(i); }
    bool is_zero() const noexcept;

    friend bool operator==(const HashVector&, const HashVector&) = default;

  private:
    HashVector(Params params, std::vector<std::uint32_t> components)
        : params_(params), components_(std::move(components)) {}

    friend HashVector expand(BytesView, const Params&);
    friend HashVector vec_add(const HashVector&, const HashVector&);
    friend HashVector vec_neg(const HashVector&);
    friend HashVector digest_deserialize(BytesView, const Params&);

    Params params_;
    std::vector<std::uint32_t> components_;
};

/// A digest is exactly a hash vector; the alias marks values that summarize
/// a whole multiset or database state.
using Digest = HashVector;

/// Randomization step: runs the Params' XOF over `data` and slices the
/// n*d-bit output into n components of d bits each.
///
/// The XOF input is domain-separated with the prefix 0x48 ('H') || d as two
/// little-endian bytes || n as two little-endian bytes, so vectors produced
/// under different Params never share preimages. Output bits are consumed
/// byte-stream first, and each component takes its d bits with little-endian
/// bit significance; for d=16, component j is bytes[2j] + 256*bytes[2j+1].
HashVector expand(BytesView data, const Params& params);

/// Component-wise sum mod q. Throws Error(IncompatibleParams) on mixed Params.
HashVector vec_add(const HashVector& a, const HashVector& b);

/// Component-wise additive inverse: vec_add(a, vec_neg(a)) is the zero vector.
HashVector vec_neg(const HashVector& a);

/// Combine step: the sum of expand(e) over every element of the multiset.
/// Duplicates contribute once per occurrence; order never matters; the empty
/// multiset hashes to the zero vector.
Digest multiset_hash(std::span<const Bytes> elements, const Params& params);

/// Adds one element's vector into an existing digest. Multiset semantics:
/// inserting the same element twice adds its vector twice.
Digest digest_insert(const Digest& digest, BytesView element);

/// Subtracts one element's vector from a digest. The hash layer cannot tell
/// whether the element was ever present; removing an absent element silently
/// corrupts the digest. Presence checks belong to the row store.
Digest digest_remove(const Digest& digest, BytesView element);

/// Hash of the multiset union: component-wise sum of both digests.
Digest digest_merge(const Digest& a, const Digest& b);

/// Packs components in index order, each taking d bits with little-endian
/// bit significance in consecutive bytes. Always n*d/8 bytes.
Bytes digest_serialize(const Digest& digest);

/// Inverse of digest_serialize. Throws Error(MalformedDigest) when the byte
/// length is not exactly n*d/8.
Digest digest_deserialize(BytesView bytes, const Params& params);

/// Short display form: first 8 bytes of SHAKE-256 over the serialized digest,
/// rendered as 16 hex characters.
std::string digest_fingerprint(const Digest& digest);

// Self-describing digest file: "HMHDIG01" || d (1 byte) || n (4 bytes LE) ||
// xof id (1 byte) || raw digest bytes.
void write_digest_file(const std::filesystem::path& path, const Digest& digest);
Digest read_digest_file(const std::filesystem::path& path);

}  // namespace hmh
