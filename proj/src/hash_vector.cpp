#include "hmh/hash_vector.hpp"

#include <algorithm>
#include <fstream>

#include "hmh/xof.hpp"

namespace hmh {

namespace {

Bytes domain_tag(const Params& params) {
    Bytes tag;
    tag.reserve(5);
    tag.push_back(0x48);  // 'H'
    put_u16_le(tag, std::uint16_t(params.d()));
    put_u16_le(tag, std::uint16_t(params.n()));
    return tag;
}

// Packs `comps` into a bitstream, each component contributing d bits with
// little-endian significance. n*d is a whole number of bytes by invariant.
Bytes pack_components(std::span<const std::uint32_t> comps, std::uint32_t d) {
    Bytes out(comps.size() * d / 8, 0);
    if (d % 8 == 0) {
        const std::uint32_t width = d / 8;
        std::size_t pos = 0;
        for (std::uint32_t c : comps)
            for (std::uint32_t b = 0; b < width; ++b) out[pos++] = std::uint8_t(c >> (8 * b));
        return out;
    }
    std::size_t bit = 0;
    for (std::uint32_t c : comps) {
        for (std::uint32_t b = 0; b < d; ++b, ++bit) {
            if (c >> b & 1u) out[bit >> 3] |= std::uint8_t(1u << (bit & 7));
        }
    }
    return out;
}

std::vector<std::uint32_t> unpack_components(BytesView bytes, const Params& params) {
    const std::uint32_t d = params.d();
    std::vector<std::uint32_t> comps(params.n());
    if (d % 8 == 0) {
        const std::uint32_t width = d / 8;
        std::size_t pos = 0;
        for (auto& c : comps) {
            std::uint32_t v = 0;
            for (std::uint32_t b = 0; b < width; ++b) v |= std::uint32_t(bytes[pos++]) << (8 * b);
            c = v;
        }
        return comps;
    }
    std::size_t bit = 0;
    for (auto& c : comps) {
        std::uint32_t v = 0;
        for (std::uint32_t b = 0; b < d; ++b, ++bit) {
            v |= std::uint32_t(bytes[bit >> 3] >> (bit & 7) & 1u) << b;
        }
        c = v;
    }
    return comps;
}

}  // namespace

HashVector HashVector::zero(const Params& params) {
    return HashVector(params, std::vector<std::uint32_t>(params.n(), 0));
}

HashVector HashVector::from_components(const Params& params, std::vector<std::uint32_t> components) {
    if (components.size() != params.n())
        raise(ErrorCode::MalformedDigest, "component count does not match n");
    const std::uint32_t mask = params.component_mask();
    for (auto& c : components) c &= mask;
    return HashVector(params, std::move(components));
}

bool HashVector::is_zero() const noexcept {
    return std::all_of(components_.begin(), components_.end(), [](std::uint32_t c) { return c == 0; });
}

HashVector expand(BytesView data, const Params& params) {
    Bytes input = domain_tag(params);
    append(input, data);
    Bytes stream = xof(params.xof_id(), input, params.digest_bytes());
    return HashVector(params, unpack_components(stream, params));
}

HashVector vec_add(const HashVector& a, const HashVector& b) {
    require_same_params(a.params(), b.params());
    const std::uint32_t mask = a.params().component_mask();
    std::vector<std::uint32_t> out(a.components_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a.components_[i] + b.components_[i]) & mask;
    return HashVector(a.params_, std::move(out));
}

HashVector vec_neg(const HashVector& a) {
    const std::uint32_t mask = a.params().component_mask();
    std::vector<std::uint32_t> out(a.components_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (0u - a.components_[i]) & mask;
    return HashVector(a.params_, std::move(out));
}

Digest multiset_hash(std::span<const Bytes> elements, const Params& params) {
    Digest acc = HashVector::zero(params);
    for (const Bytes& e : elements) acc = digest_insert(acc, e);
    return acc;
}

Digest digest_insert(const Digest& digest, BytesView element) {
    return vec_add(digest, expand(element, digest.params()));
}

Digest digest_remove(const Digest& digest, BytesView element) {
    return vec_add(digest, vec_neg(expand(element, digest.params())));
}

Digest digest_merge(const Digest& a, const Digest& b) {
    return vec_add(a, b);
}

Bytes digest_serialize(const Digest& digest) {
    return pack_components(digest.components(), digest.params().d());
}

Digest digest_deserialize(BytesView bytes, const Params& params) {
    if (bytes.size() != params.digest_bytes())
        raise(ErrorCode::MalformedDigest, "expected " + std::to_string(params.digest_bytes()) +
                                              " bytes, got " + std::to_string(bytes.size()));
    return HashVector(params, unpack_components(bytes, params));
}

std::string digest_fingerprint(const Digest& digest) {
    return to_hex(shake256(digest_serialize(digest), 8));
}

void write_digest_file(const std::filesystem::path& path, const Digest& digest) {
    Bytes out;
    append(out, std::string_view("HMHDIG01"));
    out.push_back(std::uint8_t(digest.params().d()));
    put_u32_le(out, digest.params().n());
    out.push_back(std::uint8_t(digest.params().xof_id()));
    append(out, digest_serialize(digest));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) raise(ErrorCode::Io, "write failed: " + path.string());
}

Digest read_digest_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ByteReader r(data);
    r.expect("HMHDIG01");
    std::uint32_t d = r.u8();
    std::uint32_t n = r.u32_le();
    auto xof_id = XofId(r.u8());
    Params params(d, n, xof_id);
    Digest digest = digest_deserialize(r.take(params.digest_bytes()), params);
    r.require_done();
    return digest;
}

}  // namespace hmh
