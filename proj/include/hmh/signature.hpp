#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hmh/bytes.hpp"
#include "hmh/hash_vector.hpp"

namespace hmh {

constexpr std::uint8_t kSchemeEd25519 = 1;
/// Test-only scheme: signature = SHAKE-256(key || message). INSECURE by
/// construction (the "public" key is the shared secret); exists so protocol
/// tests can run without any asymmetric crypto in the loop.
constexpr std::uint8_t kSchemeNullSig = 2;

struct KeyPair {
    Bytes secret_key;
    Bytes public_key;
    std::uint8_t scheme_id = 0;
};

/// Pluggable signature backend. Implementations are stateless; all methods
/// are safe for concurrent use.
class SignatureScheme {
  public:
    virtual ~SignatureScheme() = default;

    virtual std::uint8_t id() const = 0;
    virtual std::string_view name() const = 0;

    /// Deterministic: the same entropy always yields the same key pair.
    virtual KeyPair keygen(BytesView entropy) const = 0;

    virtual Bytes sign(BytesView secret_key, BytesView message) const = 0;

    /// Returns false on a clean mismatch; throws Error(MalformedInput) when
    /// the key or signature bytes cannot possibly belong to the scheme.
    virtual bool verify(BytesView public_key, BytesView message, BytesView signature) const = 0;
};

/// Throws Error(UnsupportedScheme) for ids with no registered backend.
const SignatureScheme& scheme_from_id(std::uint8_t id);
const SignatureScheme& scheme_from_name(std::string_view name);

/// The byte string that gets signed: "HMHSIG01" || version (8 bytes BE) ||
/// serialized digest. Binding the version prevents replaying an identical
/// digest across versions.
Bytes canonical_message(std::uint64_t version, const Digest& digest);

/// A (version, digest) pair bound to the distributor key. Not
/// default-constructible: a SignedDigest always carries a real digest.
struct SignedDigest {
    std::uint64_t version;
    Digest digest;
    Bytes signature;
    std::uint8_t scheme_id;

    /// Wire form: scheme_id (1) || version (8 BE) || digest length (4 BE) ||
    /// digest || signature length (2 BE) || signature.
    Bytes encode() const;
    static SignedDigest decode(BytesView bytes, const Params& params);

    friend bool operator==(const SignedDigest&, const SignedDigest&) = default;
};

SignedDigest make_signed_digest(const SignatureScheme& scheme, BytesView secret_key,
                                std::uint64_t version, Digest digest);

bool verify_signed_digest(const SignedDigest& signed_digest, BytesView public_key);

// Key files: "HMHKEY01" || scheme_id (1 byte) || raw key bytes.
void write_key_file(const std::filesystem::path& path, std::uint8_t scheme_id, BytesView key);
std::pair<std::uint8_t, Bytes> read_key_file(const std::filesystem::path& path);

}  // namespace hmh
