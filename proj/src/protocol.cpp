#include "hmh/protocol.hpp"

#include <algorithm>

#include "hmh/xof.hpp"

namespace hmh {

SetupResult setup(std::uint32_t security_level, BytesView entropy, std::uint8_t scheme_id) {
    std::uint32_t n = 0;
    switch (security_level) {
        case 128: n = 1024; break;
        case 192: n = 2048; break;
        case 256: n = 4096; break;
        default: raise(ErrorCode::Config, "security level must be 128, 192 or 256");
    }
    if (entropy.size() < 32) raise(ErrorCode::Config, "setup needs >= 32 bytes of entropy");
    Params params(16, n);
    const SignatureScheme& scheme = scheme_from_id(scheme_id);
    KeyPair keys = scheme.keygen(entropy);
    Bytes aux_input = to_bytes("HMH-AUX-SEED");
    append(aux_input, entropy);
    Bytes aux_seed = shake256(aux_input, security_level / 8);
    return SetupResult{
        PublicParameters{params, scheme_id, std::move(keys.public_key), std::move(aux_seed)},
        std::move(keys.secret_key)};
}

void UpdateLog::append(LogEntry entry) {
    entry.delta.validate();
    if (entry.delta.version != head_version() + 1)
        raise(ErrorCode::OutOfOrder, "log append must be consecutive");
    entries_.push_back(std::move(entry));
}

UpdateLog UpdateLog::restore(std::uint64_t floor, std::vector<LogEntry> entries) {
    UpdateLog log;
    log.floor_ = floor;
    for (auto& entry : entries) log.append(std::move(entry));
    return log;
}

std::vector<UpdateDelta> UpdateLog::range(std::uint64_t v, std::uint64_t w) const {
    if (v < floor_)
        raise(ErrorCode::LogTruncated, "versions <= " + std::to_string(floor_) +
                                           " were compacted; full resync required");
    if (w > head_version()) raise(ErrorCode::UnknownVersion, "log has no version " + std::to_string(w));
    std::vector<UpdateDelta> out;
    out.reserve(w - v);
    for (std::uint64_t ver = v + 1; ver <= w; ++ver) out.push_back(entries_[ver - floor_ - 1].delta);
    return out;
}

const LogEntry& UpdateLog::entry_at(std::uint64_t version) const {
    if (version <= floor_) raise(ErrorCode::LogTruncated, "entry compacted away");
    if (version > head_version()) raise(ErrorCode::UnknownVersion, "no such version");
    return entries_[version - floor_ - 1];
}

const UpdateDelta& UpdateLog::delta_at(std::uint64_t version) const {
    return entry_at(version).delta;
}

const Bytes& UpdateLog::signature_at(std::uint64_t version) const {
    return entry_at(version).signature;
}

void UpdateLog::compact(std::uint64_t floor) {
    if (floor <= floor_) return;
    if (floor > head_version()) raise(ErrorCode::Config, "cannot compact beyond the head");
    while (floor_ < floor) {
        entries_.pop_front();
        ++floor_;
    }
}

Distributor::Distributor(PublicParameters pp, Bytes secret_key)
    : Distributor(pp, std::move(secret_key), Database(pp.hash_params)) {}

Distributor::Distributor(PublicParameters pp, Bytes secret_key, Database db)
    : pp_(std::move(pp)),
      secret_key_(std::move(secret_key)),
      db_(std::move(db)),
      signed_(make_signed_digest(scheme_from_id(pp_.scheme_id), secret_key_, 0, full_hash(db_))),
      genesis_signature_(signed_.signature) {
    require_same_params(pp_.hash_params, db_.params);
}

Distributor::Distributor(PublicParameters pp, Bytes secret_key, Database db, SignedDigest current,
                         Bytes genesis_signature, UpdateLog log)
    : pp_(std::move(pp)),
      secret_key_(std::move(secret_key)),
      db_(std::move(db)),
      signed_(std::move(current)),
      genesis_signature_(std::move(genesis_signature)),
      log_(std::move(log)) {}

Distributor Distributor::restore(PublicParameters pp, Bytes secret_key, Database db,
                                 SignedDigest current, Bytes genesis_signature, UpdateLog log,
                                 bool audit_state) {
    require_same_params(pp.hash_params, db.params);
    if (log.head_version() != current.version)
        raise(ErrorCode::OutOfOrder, "log head does not match the current version");
    Distributor dist(std::move(pp), std::move(secret_key), std::move(db), std::move(current),
                     std::move(genesis_signature), std::move(log));
    if (audit_state && !dist.audit())
        raise(ErrorCode::TamperDetected, "restored state fails its digest/signature audit");
    return dist;
}

SignedDigest Distributor::publish(const DeltaBody& body) {
    check_applicable(db_, body);  // throws before any state is touched
    const std::uint64_t new_version = signed_.version + 1;
    Digest new_digest = vec_add(signed_.digest, delta_hash(body, pp_.hash_params));
    SignedDigest new_signed = make_signed_digest(scheme_from_id(pp_.scheme_id), secret_key_,
                                                 new_version, std::move(new_digest));
    log_.append(LogEntry{UpdateDelta{new_version, body}, new_signed.signature});
    db_ = apply_to_db(std::move(db_), body);
    signed_ = new_signed;
    return new_signed;
}

Digest digest_at_version(const SignedDigest& current, const UpdateLog& log, std::uint64_t version,
                         const Params& params) {
    if (version > current.version) raise(ErrorCode::UnknownVersion, "version beyond the head");
    Digest digest = current.digest;
    for (std::uint64_t ver = current.version; ver > version; --ver)
        digest = vec_add(digest, vec_neg(delta_hash(log.delta_at(ver), params)));
    return digest;
}

Digest Distributor::digest_at(std::uint64_t version) const {
    return digest_at_version(signed_, log_, version, pp_.hash_params);
}

std::pair<std::vector<UpdateDelta>, SignedDigest> Distributor::get_updates(std::uint64_t v,
                                                                           std::uint64_t w) const {
    if (w <= v) raise(ErrorCode::InvalidRange, "target version must exceed current version");
    if (w > signed_.version)
        raise(ErrorCode::UnknownVersion, "head is " + std::to_string(signed_.version) +
                                             ", requested " + std::to_string(w));
    std::vector<UpdateDelta> deltas = log_.range(v, w);
    SignedDigest at_w{w, digest_at(w), log_.signature_at(w), pp_.scheme_id};
    return {std::move(deltas), std::move(at_w)};
}

std::pair<Database, SignedDigest> Distributor::snapshot() const {
    return {db_, signed_};
}

bool Distributor::audit() const {
    if (!(full_hash(db_) == signed_.digest)) return false;
    return verify_signed_digest(signed_, pp_.public_key);
}

Subscriber::Subscriber(PublicParameters pp, SignedDigest genesis)
    : Subscriber(pp, std::move(genesis), Database(pp.hash_params)) {}

Subscriber::Subscriber(PublicParameters pp, SignedDigest genesis, Database initial)
    : pp_(std::move(pp)), db_(std::move(initial)), last_signed_(std::move(genesis)) {
    require_same_params(pp_.hash_params, db_.params);
    if (!(full_hash(db_) == last_signed_.digest))
        raise(ErrorCode::TamperDetected, "genesis digest does not match the initial replica");
    if (!verify_signed_digest(last_signed_, pp_.public_key))
        raise(ErrorCode::TamperDetected, "genesis signature rejected");
}

void Subscriber::apply_updates(std::span<const UpdateDelta> deltas,
                               const SignedDigest& signed_digest) {
    // Sequencing checks: consecutive versions continuing our own, and the
    // signed digest bound to the last of them.
    std::uint64_t expected = last_signed_.version;
    for (const UpdateDelta& delta : deltas) {
        delta.validate();
        if (delta.version != expected + 1)
            raise(ErrorCode::OutOfOrder, "delta versions must continue " + std::to_string(expected));
        expected = delta.version;
    }
    if (signed_digest.version != expected)
        raise(ErrorCode::OutOfOrder, "signed digest is for version " +
                                         std::to_string(signed_digest.version) + ", batch ends at " +
                                         std::to_string(expected));
    if (signed_digest.scheme_id != pp_.scheme_id)
        raise(ErrorCode::TamperDetected, "signed digest uses an unexpected scheme");

    // Fold the deltas and verify before touching the replica.
    Digest folded = last_signed_.digest;
    for (const UpdateDelta& delta : deltas)
        folded = vec_add(folded, delta_hash(delta, pp_.hash_params));
    if (!(folded == signed_digest.digest))
        raise(ErrorCode::TamperDetected, "folded digest does not match the signed digest");
    if (!verify_signed_digest(signed_digest, pp_.public_key))
        raise(ErrorCode::TamperDetected, "signature rejected");

    // Stage the row changes on a copy; commit by swap, all or nothing.
    Database staged = db_;
    for (const UpdateDelta& delta : deltas) {
        try {
            staged = apply_to_db(std::move(staged), delta.body);
        } catch (const Error& e) {
            raise(ErrorCode::CorruptDelta, "verified batch failed row preconditions at version " +
                                               std::to_string(delta.version) + ": " + e.what());
        }
    }
    db_ = std::move(staged);
    last_signed_ = signed_digest;
}

void Subscriber::full_resync(Database db, SignedDigest signed_digest) {
    require_same_params(pp_.hash_params, db.params);
    if (signed_digest.scheme_id != pp_.scheme_id)
        raise(ErrorCode::TamperDetected, "snapshot uses an unexpected scheme");
    if (!(full_hash(db) == signed_digest.digest))
        raise(ErrorCode::TamperDetected, "snapshot digest does not match its rows");
    if (!verify_signed_digest(signed_digest, pp_.public_key))
        raise(ErrorCode::TamperDetected, "snapshot signature rejected");
    db_ = std::move(db);
    last_signed_ = std::move(signed_digest);
}

ValidationResult Subscriber::validate() const {
    ValidationResult result;
    Digest recomputed = full_hash(db_);
    result.recomputed_fingerprint = digest_fingerprint(recomputed);
    result.expected_fingerprint = digest_fingerprint(last_signed_.digest);
    result.digest_match = recomputed == last_signed_.digest;
    result.signature_ok =
        verify_signed_digest(SignedDigest{last_signed_.version, std::move(recomputed),
                                          last_signed_.signature, last_signed_.scheme_id},
                             pp_.public_key);
    result.ok = result.digest_match && result.signature_ok;
    return result;
}

// --- Wire encodings ---

Bytes encode_get_updates_request(const GetUpdatesRequest& req) {
    Bytes out;
    out.reserve(24);
    append(out, std::string_view("HMHREQ01"));
    put_u64_be(out, req.from_version);
    put_u64_be(out, req.to_version);
    return out;
}

GetUpdatesRequest decode_get_updates_request(BytesView bytes) {
    ByteReader r(bytes);
    r.expect("HMHREQ01");
    GetUpdatesRequest req{r.u64_be(), r.u64_be()};
    r.require_done();
    return req;
}

namespace {

void encode_delta(Bytes& out, const UpdateDelta& delta) {
    put_u64_be(out, delta.version);
    out.push_back(std::uint8_t(delta.body.kind));
    put_u64_be(out, delta.body.index);
    const Bytes empty;
    const Bytes& old_payload = delta.body.old_payload ? *delta.body.old_payload : empty;
    const Bytes& new_payload = delta.body.new_payload ? *delta.body.new_payload : empty;
    put_u32_be(out, std::uint32_t(old_payload.size()));
    append(out, old_payload);
    put_u32_be(out, std::uint32_t(new_payload.size()));
    append(out, new_payload);
}

UpdateDelta decode_delta(ByteReader& r) {
    UpdateDelta delta;
    delta.version = r.u64_be();
    std::uint8_t kind = r.u8();
    if (kind > 2) raise(ErrorCode::Parse, "unknown delta kind byte");
    delta.body.kind = DeltaKind(kind);
    delta.body.index = r.u64_be();
    Bytes old_payload = r.take(r.u32_be());
    Bytes new_payload = r.take(r.u32_be());
    // Payload presence is kind-implied; a kind's absent field must be empty
    // on the wire.
    if (delta.body.kind != DeltaKind::Insert) delta.body.old_payload = std::move(old_payload);
    else if (!old_payload.empty()) raise(ErrorCode::Parse, "insert with non-empty old payload");
    if (delta.body.kind != DeltaKind::Delete) delta.body.new_payload = std::move(new_payload);
    else if (!new_payload.empty()) raise(ErrorCode::Parse, "delete with non-empty new payload");
    delta.validate();
    return delta;
}

}  // namespace

Bytes encode_get_updates_response(const GetUpdatesResponse& rsp) {
    Bytes out;
    append(out, std::string_view("HMHRSP01"));
    put_u32_be(out, std::uint32_t(rsp.deltas.size()));
    for (const UpdateDelta& delta : rsp.deltas) encode_delta(out, delta);
    append(out, rsp.signed_digest.encode());
    return out;
}

GetUpdatesResponse decode_get_updates_response(BytesView bytes, const Params& params) {
    ByteReader r(bytes);
    r.expect("HMHRSP01");
    std::uint32_t count = r.u32_be();
    std::vector<UpdateDelta> deltas;
    deltas.reserve(std::min<std::uint32_t>(count, 65536));  // count is attacker-controlled
    for (std::uint32_t i = 0; i < count; ++i) deltas.push_back(decode_delta(r));
    Bytes rest = r.take(r.remaining());
    SignedDigest signed_digest = SignedDigest::decode(rest, params);
    return GetUpdatesResponse{std::move(deltas), std::move(signed_digest)};
}

Bytes encode_error_response(const ErrorResponse& err) {
    Bytes out;
    append(out, std::string_view("HMHERR01"));
    out.push_back(error_code_to_wire(err.code));
    append(out, err.message);
    return out;
}

ErrorResponse decode_error_response(BytesView bytes) {
    ByteReader r(bytes);
    r.expect("HMHERR01");
    ErrorCode code = error_code_from_wire(r.u8());
    Bytes msg = r.take(r.remaining());
    return ErrorResponse{code, to_string(msg)};
}

std::uint8_t error_code_to_wire(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidRange: return 1;
        case ErrorCode::UnknownVersion: return 2;
        case ErrorCode::LogTruncated: return 3;
        case ErrorCode::Parse: return 4;
        default: return 255;
    }
}

ErrorCode error_code_from_wire(std::uint8_t wire) {
    switch (wire) {
        case 1: return ErrorCode::InvalidRange;
        case 2: return ErrorCode::UnknownVersion;
        case 3: return ErrorCode::LogTruncated;
        case 4: return ErrorCode::Parse;
        default: return ErrorCode::Config;
    }
}

std::variant<GetUpdatesResponse, ErrorResponse> decode_response(BytesView bytes,
                                                                const Params& params) {
    if (bytes.size() >= 8) {
        std::string_view magic(reinterpret_cast<const char*>(bytes.data()), 8);
        if (magic == "HMHRSP01") return decode_get_updates_response(bytes, params);
        if (magic == "HMHERR01") return decode_error_response(bytes);
    }
    raise(ErrorCode::Parse, "unknown response magic");
}

Bytes handle_request(const Distributor& dist, BytesView request_bytes) {
    try {
        GetUpdatesRequest req = decode_get_updates_request(request_bytes);
        auto [deltas, signed_digest] = dist.get_updates(req.from_version, req.to_version);
        return encode_get_updates_response(GetUpdatesResponse{std::move(deltas), signed_digest});
    } catch (const Error& e) {
        return encode_error_response(ErrorResponse{e.code(), e.what()});
    }
}

}  // namespace hmh
