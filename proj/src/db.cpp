#include "hmh/db.hpp"

#include <fstream>
#include <sstream>

namespace hmh {

std::string_view delta_kind_name(DeltaKind kind) {
    switch (kind) {
        case DeltaKind::Modify: return "modify";
        case DeltaKind::Insert: return "insert";
        case DeltaKind::Delete: return "delete";
    }
    return "?";
}

DeltaKind delta_kind_from_name(std::string_view name) {
    if (name == "modify") return DeltaKind::Modify;
    if (name == "insert") return DeltaKind::Insert;
    if (name == "delete") return DeltaKind::Delete;
    raise(ErrorCode::Parse, "unknown delta kind '" + std::string(name) + "'");
}

void DeltaBody::validate() const {
    if (index == 0) raise(ErrorCode::InvalidIndex, "row index must be >= 1");
    switch (kind) {
        case DeltaKind::Modify:
            if (!old_payload || !new_payload)
                raise(ErrorCode::MalformedDelta, "modify requires both payloads");
            break;
        case DeltaKind::Insert:
            if (!new_payload || old_payload)
                raise(ErrorCode::MalformedDelta, "insert carries only the new payload");
            break;
        case DeltaKind::Delete:
            if (!old_payload || new_payload)
                raise(ErrorCode::MalformedDelta, "delete carries only the old payload");
            break;
        default:
            raise(ErrorCode::MalformedDelta, "unknown delta kind");
    }
}

void UpdateDelta::validate() const {
    if (version == 0) raise(ErrorCode::MalformedDelta, "delta version must be >= 1");
    body.validate();
}

Bytes encode_row(std::uint64_t index, BytesView payload) {
    if (index == 0) raise(ErrorCode::InvalidIndex, "row index must be >= 1");
    Bytes out;
    out.reserve(8 + payload.size());
    put_u64_be(out, index);
    append(out, payload);
    return out;
}

Digest full_hash(const Database& db) {
    Digest acc = HashVector::zero(db.params);
    for (const auto& [index, payload] : db.rows) acc = digest_insert(acc, encode_row(index, payload));
    return acc;
}

Digest delta_hash(const DeltaBody& body, const Params& params) {
    body.validate();
    switch (body.kind) {
        case DeltaKind::Modify:
            return vec_add(expand(encode_row(body.index, *body.new_payload), params),
                           vec_neg(expand(encode_row(body.index, *body.old_payload), params)));
        case DeltaKind::Insert:
            return expand(encode_row(body.index, *body.new_payload), params);
        case DeltaKind::Delete:
            return vec_neg(expand(encode_row(body.index, *body.old_payload), params));
    }
    raise(ErrorCode::MalformedDelta, "unknown delta kind");
}

Digest delta_hash(const UpdateDelta& delta, const Params& params) {
    return delta_hash(delta.body, params);
}

void check_applicable(const Database& db, const DeltaBody& body) {
    body.validate();
    auto it = db.rows.find(body.index);
    switch (body.kind) {
        case DeltaKind::Modify:
        case DeltaKind::Delete:
            if (it == db.rows.end())
                raise(ErrorCode::MissingRow,
                      "row " + std::to_string(body.index) + " does not exist");
            if (it->second != *body.old_payload)
                raise(ErrorCode::StaleDelta,
                      "old payload mismatch for row " + std::to_string(body.index));
            break;
        case DeltaKind::Insert:
            if (it != db.rows.end())
                raise(ErrorCode::DuplicateIndex,
                      "row " + std::to_string(body.index) + " already exists");
            break;
    }
}

Database apply_to_db(Database db, const DeltaBody& body) {
    check_applicable(db, body);
    switch (body.kind) {
        case DeltaKind::Modify:
            db.rows[body.index] = *body.new_payload;
            break;
        case DeltaKind::Insert:
            db.rows.emplace(body.index, *body.new_payload);
            break;
        case DeltaKind::Delete:
            db.rows.erase(body.index);
            break;
    }
    return db;
}

std::string database_to_fixture(const Database& db) {
    std::string out;
    for (const auto& [index, payload] : db.rows) {
        out += std::to_string(index);
        out += '\t';
        out += to_base64(payload);
        out += '\n';
    }
    return out;
}

namespace {

std::uint64_t parse_u64(std::string_view field, std::string_view what) {
    if (field.empty()) raise(ErrorCode::Parse, std::string(what) + " is empty");
    std::uint64_t v = 0;
    for (char c : field) {
        if (c < '0' || c > '9') raise(ErrorCode::Parse, "bad digit in " + std::string(what));
        std::uint64_t next = v * 10 + std::uint64_t(c - '0');
        if (next / 10 != v) raise(ErrorCode::Parse, std::string(what) + " overflows 64 bits");
        v = next;
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

}  // namespace

Database database_from_fixture(std::string_view text, const Params& params) {
    Database db(params);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 2) raise(ErrorCode::Parse, "fixture line needs 2 fields");
        std::uint64_t index = parse_u64(fields[0], "row index");
        if (index == 0) raise(ErrorCode::InvalidIndex, "row index must be >= 1");
        auto [it, inserted] = db.rows.emplace(index, from_base64(fields[1]));
        if (!inserted) raise(ErrorCode::DuplicateIndex, "duplicate row " + std::to_string(index));
    }
    return db;
}

void write_database_fixture(const std::filesystem::path& path, const Database& db) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    std::string text = database_to_fixture(db);
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) raise(ErrorCode::Io, "write failed: " + path.string());
}

Database read_database_fixture(const std::filesystem::path& path, const Params& params) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return database_from_fixture(ss.str(), params);
}

std::string delta_to_log_line(const UpdateDelta& delta) {
    delta.validate();
    std::string out = std::to_string(delta.version);
    out += '\t';
    out += delta_kind_name(delta.body.kind);
    out += '\t';
    out += std::to_string(delta.body.index);
    out += '\t';
    if (delta.body.old_payload) out += to_base64(*delta.body.old_payload);
    out += '\t';
    if (delta.body.new_payload) out += to_base64(*delta.body.new_payload);
    return out;
}

UpdateDelta delta_from_log_line(std::string_view line) {
    auto fields = split_fields(line);
    if (fields.size() != 5) raise(ErrorCode::Parse, "delta log line needs 5 fields");
    UpdateDelta delta;
    delta.version = parse_u64(fields[0], "version");
    delta.body.kind = delta_kind_from_name(fields[1]);
    delta.body.index = parse_u64(fields[2], "row index");
    // Presence is kind-implied; an empty present field is an empty payload.
    if (delta.body.kind != DeltaKind::Insert)
        delta.body.old_payload = from_base64(fields[3]);
    else if (!fields[3].empty())
        raise(ErrorCode::Parse, "insert must leave the old field empty");
    if (delta.body.kind != DeltaKind::Delete)
        delta.body.new_payload = from_base64(fields[4]);
    else if (!fields[4].empty())
        raise(ErrorCode::Parse, "delete must leave the new field empty");
    delta.validate();
    return delta;
}

}  // namespace hmh
