#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "hmh/bytes.hpp"
#include "hmh/hash_vector.hpp"
#include "hmh/params.hpp"

namespace hmh {

/// The three row-change kinds. Wire encoding: Modify=0, Insert=1, Delete=2.
enum class DeltaKind : std::uint8_t {
    Modify = 0,
    Insert = 1,
    Delete = 2,
};

std::string_view delta_kind_name(DeltaKind kind);
DeltaKind delta_kind_from_name(std::string_view name);  // throws Error(Parse)

/// A single row change before the distributor assigns it a version.
/// Modify carries both payloads, Insert only the new one, Delete only the
/// old one.
struct DeltaBody {
    DeltaKind kind = DeltaKind::Modify;
    std::uint64_t index = 0;
    std::optional<Bytes> old_payload;
    std::optional<Bytes> new_payload;

    static DeltaBody modify(std::uint64_t index, Bytes old_payload, Bytes new_payload) {
        return {DeltaKind::Modify, index, std::move(old_payload), std::move(new_payload)};
    }
    static DeltaBody insert(std::uint64_t index, Bytes new_payload) {
        return {DeltaKind::Insert, index, std::nullopt, std::move(new_payload)};
    }
    static DeltaBody remove(std::uint64_t index, Bytes old_payload) {
        return {DeltaKind::Delete, index, std::move(old_payload), std::nullopt};
    }

    /// Throws Error(MalformedDelta) when a payload required by the kind is
    /// absent or a forbidden one is present, Error(InvalidIndex) on index 0.
    void validate() const;

    friend bool operator==(const DeltaBody&, const DeltaBody&) = default;
};

/// A versioned row change: `version` is the database version this delta
/// produces (>= 1, assigned consecutively by the distributor).
struct UpdateDelta {
    std::uint64_t version = 0;
    DeltaBody body;

    void validate() const;

    friend bool operator==(const UpdateDelta&, const UpdateDelta&) = default;
};

/// Ordered row store: index -> payload, ascending iteration, indices >= 1 and
/// unique. Values are plain data; treat them as immutable and produce new
/// ones via apply_to_db.
struct Database {
    explicit Database(Params params) : params(params) {}

    Params params;
    std::map<std::uint64_t, Bytes> rows;

    std::size_t row_count() const noexcept { return rows.size(); }

    friend bool operator==(const Database&, const Database&) = default;
};

/// Canonical row encoding: 8-byte big-endian index followed by the payload.
/// The fixed-width prefix makes the encoding injective. Throws
/// Error(InvalidIndex) on index 0.
Bytes encode_row(std::uint64_t index, BytesView payload);

/// Hash of the whole database: multiset hash over every encoded row. The
/// empty database hashes to the zero vector.
Digest full_hash(const Database& db);

/// Digest contribution of a single delta:
///   Modify -> expand(encode(i,new)) + neg(expand(encode(i,old)))
///   Insert -> expand(encode(i,new))
///   Delete -> neg(expand(encode(i,old)))
Digest delta_hash(const DeltaBody& body, const Params& params);
Digest delta_hash(const UpdateDelta& delta, const Params& params);

/// Applies a delta to the row store, checking its preconditions first:
/// Modify/Delete require the row to exist with a payload equal to
/// old_payload (Error(MissingRow) / Error(StaleDelta) otherwise); Insert
/// requires the index to be absent (Error(DuplicateIndex)). Takes the
/// database by value; pass a copy to keep the original, or move it in when
/// the old value is no longer needed. full_hash of the result always equals
/// vec_add(full_hash(input), delta_hash(delta)).
Database apply_to_db(Database db, const DeltaBody& body);

/// Precondition check without mutation; throws the same errors apply_to_db
/// would.
void check_applicable(const Database& db, const DeltaBody& body);

// Fixture file format: one row per line, "index<TAB>base64(payload)"; line
// order on disk is irrelevant.
std::string database_to_fixture(const Database& db);
Database database_from_fixture(std::string_view text, const Params& params);
void write_database_fixture(const std::filesystem::path& path, const Database& db);
Database read_database_fixture(const std::filesystem::path& path, const Params& params);

// Delta log line format:
// "version<TAB>kind<TAB>index<TAB>base64(old)<TAB>base64(new)" with empty
// fields for payloads the kind does not carry.
std::string delta_to_log_line(const UpdateDelta& delta);
UpdateDelta delta_from_log_line(std::string_view line);

}  // namespace hmh
