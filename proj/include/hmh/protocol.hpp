#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "hmh/db.hpp"
#include "hmh/signature.hpp"

namespace hmh {

/// Everything a node needs to participate, fixed at setup and identical on
/// every honest node. aux_seed is carried opaquely and consumed by nothing.
struct PublicParameters {
    Params hash_params;
    std::uint8_t scheme_id;
    Bytes public_key;
    Bytes aux_seed;
};

struct SetupResult {
    PublicParameters pp;
    Bytes secret_key;
};

/// Maps a security level to hash parameters, generates the signing key pair
/// and assembles public parameters. Deterministic given `entropy` (>= 32
/// bytes). Levels: 128 -> (d=16, n=1024), 192 -> (16, 2048), 256 -> (16, 4096).
SetupResult setup(std::uint32_t security_level, BytesView entropy,
                  std::uint8_t scheme_id = kSchemeEd25519);

/// One log record: the delta that produced a version together with the
/// signature published for it. Historical digests are not stored; they are
/// reconstructed on demand by folding deltas back from the current digest.
struct LogEntry {
    UpdateDelta delta;
    Bytes signature;
};

/// Append-only, version-indexed delta log. Entries below the compaction
/// floor are gone; requests reaching below it fail explicitly so the caller
/// can fall back to a full resync.
class UpdateLog {
  public:
    void append(LogEntry entry);

    /// Rebuilds a log from persisted entries starting at floor+1; entries
    /// must be consecutive.
    static UpdateLog restore(std::uint64_t floor, std::vector<LogEntry> entries);

    /// Deltas for versions v+1..w, ascending. Throws Error(LogTruncated)
    /// when any of them was compacted away.
    std::vector<UpdateDelta> range(std::uint64_t v, std::uint64_t w) const;

    const UpdateDelta& delta_at(std::uint64_t version) const;
    const Bytes& signature_at(std::uint64_t version) const;

    /// Drops entries with version <= floor.
    void compact(std::uint64_t floor);

    std::uint64_t compaction_floor() const noexcept { return floor_; }
    std::uint64_t head_version() const noexcept { return floor_ + entries_.size(); }
    std::size_t size() const noexcept { return entries_.size(); }

  private:
    const LogEntry& entry_at(std::uint64_t version) const;

    std::deque<LogEntry> entries_;  // entries_[k] has version floor_ + k + 1
    std::uint64_t floor_ = 0;
};

/// The authoritative node: owns the database, assigns versions, signs every
/// digest and serves update ranges. Single writer; reads may run
/// concurrently between mutations.
class Distributor {
  public:
    /// Genesis: version 0 is the empty database with the zero digest,
    /// signed at construction so subscribers have a verifiable start.
    Distributor(PublicParameters pp, Bytes secret_key);

    /// Bootstraps from an existing row store (bulk load for benchmarks and
    /// restores): version 0 becomes the snapshot's digest.
    Distributor(PublicParameters pp, Bytes secret_key, Database db);

    /// Rebuilds a distributor from persisted state. When `audit_state` is
    /// set (the default) the digest is recomputed from the rows and the
    /// signature re-verified; mismatches raise Error(TamperDetected).
    static Distributor restore(PublicParameters pp, Bytes secret_key, Database db,
                               SignedDigest current, Bytes genesis_signature, UpdateLog log,
                               bool audit_state = true);

    /// Publish phase: assigns version current+1, folds the delta into the
    /// digest, applies it to the row store, appends to the log and signs.
    /// Cost is independent of the row count except for the single-row store
    /// touch. Strong guarantee: on error the state is unchanged.
    SignedDigest publish(const DeltaBody& body);

    /// GetUpdates phase: deltas v+1..w plus the signed digest for w.
    /// Throws Error(InvalidRange) when w <= v, Error(UnknownVersion) when
    /// w exceeds the head, Error(LogTruncated) for compacted ranges.
    std::pair<std::vector<UpdateDelta>, SignedDigest> get_updates(std::uint64_t v,
                                                                  std::uint64_t w) const;

    void compact_log(std::uint64_t floor) { log_.compact(floor); }

    /// Full-state handoff for subscribers that fell below the log floor.
    std::pair<Database, SignedDigest> snapshot() const;

    const PublicParameters& pp() const noexcept { return pp_; }
    const Database& db() const noexcept { return db_; }
    std::uint64_t current_version() const noexcept { return signed_.version; }
    const Digest& current_digest() const noexcept { return signed_.digest; }
    const SignedDigest& current_signed() const noexcept { return signed_; }
    const Bytes& genesis_signature() const noexcept { return genesis_signature_; }
    const UpdateLog& log() const noexcept { return log_; }

    /// Audit-mode invariant check: digest equals a full recompute and the
    /// current signature verifies.
    bool audit() const;

  private:
    Distributor(PublicParameters pp, Bytes secret_key, Database db, SignedDigest current,
                Bytes genesis_signature, UpdateLog log);

    /// Digest at a historical version, rebuilt by folding deltas back from
    /// the current digest; O(current - version) expand calls.
    Digest digest_at(std::uint64_t version) const;

    PublicParameters pp_;
    Bytes secret_key_;
    Database db_;
    SignedDigest signed_;
    Bytes genesis_signature_;
    UpdateLog log_;
};

/// Digest at a historical version, rebuilt by folding the log's deltas back
/// out of `current`; O(current.version - version) expand calls, zero when
/// version is current. Throws Error(LogTruncated)/Error(UnknownVersion) for
/// versions outside the retained range.
Digest digest_at_version(const SignedDigest& current, const UpdateLog& log, std::uint64_t version,
                         const Params& params);

struct ValidationResult {
    bool ok = false;              // digest_match && signature_ok
    bool digest_match = false;    // recomputed digest == maintained digest
    bool signature_ok = false;    // signature over the recomputed digest
    std::string recomputed_fingerprint;
    std::string expected_fingerprint;
};

/// A replica holder. Folds signed delta batches into its local digest and
/// replica, verifying before committing; a failed apply leaves the state
/// bit-identical. Single writer.
class Subscriber {
  public:
    /// Joins from a signed genesis or snapshot: the digest must verify and
    /// must equal the full hash of `initial` (empty database by default).
    Subscriber(PublicParameters pp, SignedDigest genesis);
    Subscriber(PublicParameters pp, SignedDigest genesis, Database initial);

    /// ApplyUpdates phase. `deltas` must start at version+1 and be
    /// consecutive, with signed_digest.version equal to the last delta's
    /// version (equal to the current version for an empty batch). Folds
    /// every delta into the digest, verifies digest equality and the
    /// signature, then applies the rows and commits atomically.
    /// Throws Error(OutOfOrder), Error(TamperDetected), Error(CorruptDelta);
    /// on any throw the subscriber is unchanged.
    void apply_updates(std::span<const UpdateDelta> deltas, const SignedDigest& signed_digest);

    /// Replaces the replica wholesale after verifying the snapshot digest
    /// and signature. The recovery path for Error(LogTruncated).
    void full_resync(Database db, SignedDigest signed_digest);

    /// Validate phase: O(N) recompute of the replica hash, checked for
    /// equality with the maintained digest and against the last signature.
    ValidationResult validate() const;

    const PublicParameters& pp() const noexcept { return pp_; }
    const Database& db_replica() const noexcept { return db_; }
    std::uint64_t version() const noexcept { return last_signed_.version; }
    const Digest& digest() const noexcept { return last_signed_.digest; }
    const SignedDigest& last_signed() const noexcept { return last_signed_; }

  private:
    PublicParameters pp_;
    Database db_;
    SignedDigest last_signed_;
};

// --- Transport-agnostic message encodings (bit-exact) ---

struct GetUpdatesRequest {
    std::uint64_t from_version;
    std::uint64_t to_version;
};

struct GetUpdatesResponse {
    std::vector<UpdateDelta> deltas;
    SignedDigest signed_digest;
};

struct ErrorResponse {
    ErrorCode code;
    std::string message;
};

/// "HMHREQ01" || v (8 BE) || w (8 BE)
Bytes encode_get_updates_request(const GetUpdatesRequest& req);
GetUpdatesRequest decode_get_updates_request(BytesView bytes);

/// "HMHRSP01" || count (4 BE) || deltas (version 8 BE, kind 1, index 8 BE,
/// old_len 4 BE, old, new_len 4 BE, new) || SignedDigest wire form
Bytes encode_get_updates_response(const GetUpdatesResponse& rsp);
GetUpdatesResponse decode_get_updates_response(BytesView bytes, const Params& params);

/// "HMHERR01" || code (1 byte) || utf-8 message
Bytes encode_error_response(const ErrorResponse& err);
ErrorResponse decode_error_response(BytesView bytes);

std::uint8_t error_code_to_wire(ErrorCode code);
ErrorCode error_code_from_wire(std::uint8_t wire);

/// Dispatches on the message magic. Throws Error(Parse) for unknown magic
/// or malformed contents.
std::variant<GetUpdatesResponse, ErrorResponse> decode_response(BytesView bytes,
                                                                const Params& params);

/// Server-side handling of one encoded request: decodes, serves get_updates
/// and encodes the response; any protocol error comes back as an encoded
/// error response.
Bytes handle_request(const Distributor& dist, BytesView request_bytes);

}  // namespace hmh
