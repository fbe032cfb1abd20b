#include "hmh/signature.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>

#include "hmh/errors.hpp"
#include "hmh/xof.hpp"

namespace hmh {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

class Ed25519Scheme final : public SignatureScheme {
  public:
    std::uint8_t id() const override { return kSchemeEd25519; }
    std::string_view name() const override { return "ed25519"; }

    KeyPair keygen(BytesView entropy) const override {
        if (entropy.size() < 32)
            raise(ErrorCode::MalformedInput, "ed25519 keygen needs >= 32 bytes of entropy");
        Bytes tagged = to_bytes("HMH-ED25519-SEED");
        append(tagged, entropy);
        Bytes seed = shake256(tagged, 32);
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
        if (!key) raise(ErrorCode::MalformedInput, "ed25519 key construction failed");
        Bytes pub(32);
        std::size_t publen = pub.size();
        if (!EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &publen) || publen != 32)
            raise(ErrorCode::MalformedInput, "ed25519 public key extraction failed");
        return KeyPair{std::move(seed), std::move(pub), id()};
    }

    Bytes sign(BytesView secret_key, BytesView message) const override {
        if (secret_key.size() != 32)
            raise(ErrorCode::MalformedInput, "ed25519 secret key must be 32 bytes");
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, secret_key.data(),
                                                 secret_key.size()));
        if (!key) raise(ErrorCode::MalformedInput, "bad ed25519 secret key");
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()))
            raise(ErrorCode::MalformedInput, "ed25519 sign init failed");
        Bytes sig(64);
        std::size_t siglen = sig.size();
        if (!EVP_DigestSign(ctx.get(), sig.data(), &siglen, message.data(), message.size()) ||
            siglen != 64)
            raise(ErrorCode::MalformedInput, "ed25519 signing failed");
        return sig;
    }

    bool verify(BytesView public_key, BytesView message, BytesView signature) const override {
        if (public_key.size() != 32)
            raise(ErrorCode::MalformedInput, "ed25519 public key must be 32 bytes");
        if (signature.size() != 64)
            raise(ErrorCode::MalformedInput, "ed25519 signature must be 64 bytes");
        PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                                public_key.size()));
        if (!key) raise(ErrorCode::MalformedInput, "bad ed25519 public key");
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()))
            raise(ErrorCode::MalformedInput, "ed25519 verify init failed");
        return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                                message.size()) == 1;
    }
};

class NullSigScheme final : public SignatureScheme {
  public:
    static constexpr std::size_t kKeyLen = 32;
    static constexpr std::size_t kSigLen = 32;

    std::uint8_t id() const override { return kSchemeNullSig; }
    std::string_view name() const override { return "nullsig"; }

    KeyPair keygen(BytesView entropy) const override {
        Bytes tagged = to_bytes("HMH-NULLSIG-KEY");
        append(tagged, entropy);
        Bytes key = shake256(tagged, kKeyLen);
        return KeyPair{key, key, id()};  // shared key: verification recomputes
    }

    Bytes sign(BytesView secret_key, BytesView message) const override {
        if (secret_key.size() != kKeyLen)
            raise(ErrorCode::MalformedInput, "nullsig key must be 32 bytes");
        Bytes input = to_bytes("HMH-NULLSIG");
        append(input, secret_key);
        append(input, message);
        return shake256(input, kSigLen);
    }

    bool verify(BytesView public_key, BytesView message, BytesView signature) const override {
        if (signature.size() != kSigLen)
            raise(ErrorCode::MalformedInput, "nullsig signature must be 32 bytes");
        Bytes expected = sign(public_key, message);
        return std::equal(expected.begin(), expected.end(), signature.begin());
    }
};

const Ed25519Scheme kEd25519{};
const NullSigScheme kNullSig{};

}  // namespace

const SignatureScheme& scheme_from_id(std::uint8_t id) {
    switch (id) {
        case kSchemeEd25519: return kEd25519;
        case kSchemeNullSig: return kNullSig;
    }
    raise(ErrorCode::UnsupportedScheme, "no signature scheme with id " + std::to_string(id));
}

const SignatureScheme& scheme_from_name(std::string_view name) {
    if (name == kEd25519.name()) return kEd25519;
    if (name == kNullSig.name()) return kNullSig;
    raise(ErrorCode::UnsupportedScheme, "no signature scheme named '" + std::string(name) + "'");
}

Bytes canonical_message(std::uint64_t version, const Digest& digest) {
    Bytes out;
    out.reserve(16 + digest.params().digest_bytes());
    append(out, std::string_view("HMHSIG01"));
    put_u64_be(out, version);
    append(out, digest_serialize(digest));
    return out;
}

Bytes SignedDigest::encode() const {
    Bytes digest_bytes = digest_serialize(digest);
    Bytes out;
    out.reserve(1 + 8 + 4 + digest_bytes.size() + 2 + signature.size());
    out.push_back(scheme_id);
    put_u64_be(out, version);
    put_u32_be(out, std::uint32_t(digest_bytes.size()));
    append(out, digest_bytes);
    put_u16_be(out, std::uint16_t(signature.size()));
    append(out, signature);
    return out;
}

SignedDigest SignedDigest::decode(BytesView bytes, const Params& params) {
    ByteReader r(bytes);
    std::uint8_t scheme_id = r.u8();
    std::uint64_t version = r.u64_be();
    std::uint32_t digest_len = r.u32_be();
    if (digest_len != params.digest_bytes())
        raise(ErrorCode::MalformedDigest, "signed digest length does not match params");
    Digest digest = digest_deserialize(r.take(digest_len), params);
    std::uint16_t sig_len = r.u16_be();
    Bytes signature = r.take(sig_len);
    r.require_done();
    return SignedDigest{version, std::move(digest), std::move(signature), scheme_id};
}

SignedDigest make_signed_digest(const SignatureScheme& scheme, BytesView secret_key,
                                std::uint64_t version, Digest digest) {
    Bytes sig = scheme.sign(secret_key, canonical_message(version, digest));
    return SignedDigest{version, std::move(digest), std::move(sig), scheme.id()};
}

bool verify_signed_digest(const SignedDigest& signed_digest, BytesView public_key) {
    const SignatureScheme& scheme = scheme_from_id(signed_digest.scheme_id);
    return scheme.verify(public_key,
                         canonical_message(signed_digest.version, signed_digest.digest),
                         signed_digest.signature);
}

void write_key_file(const std::filesystem::path& path, std::uint8_t scheme_id, BytesView key) {
    Bytes out;
    append(out, std::string_view("HMHKEY01"));
    out.push_back(scheme_id);
    append(out, key);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) raise(ErrorCode::Io, "write failed: " + path.string());
}

std::pair<std::uint8_t, Bytes> read_key_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ByteReader r(data);
    r.expect("HMHKEY01");
    std::uint8_t scheme_id = r.u8();
    Bytes key = r.take(r.remaining());
    return {scheme_id, std::move(key)};
}

}  // namespace hmh
