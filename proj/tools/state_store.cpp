#include "state_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hmh::cli {

using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spew(const fs::path& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) raise(ErrorCode::Io, "write failed: " + path.string());
}

void atomic_spew(const fs::path& path, std::string_view text) {
    fs::path tmp = path;
    tmp += ".tmp";
    spew(tmp, text);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) raise(ErrorCode::Io, "rename failed: " + path.string() + ": " + ec.message());
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        if (end > pos) lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return lines;
}

}  // namespace

LockFile::LockFile(const fs::path& state_dir) : path_(state_dir / ".lock") {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            raise(ErrorCode::Config,
                  "state dir is locked by another process (remove " + path_.string() +
                      " if that process is gone)");
        raise(ErrorCode::Io, "cannot create lock file " + path_.string());
    }
    ::close(fd);
}

LockFile::~LockFile() {
    std::error_code ec;
    fs::remove(path_, ec);
}

void write_pp_file(const fs::path& dir, const PublicParameters& pp) {
    json j{{"d", pp.hash_params.d()},
           {"n", pp.hash_params.n()},
           {"xof_id", std::uint32_t(pp.hash_params.xof_id())},
           {"scheme_id", pp.scheme_id},
           {"public_key", to_hex(pp.public_key)},
           {"aux_seed", to_hex(pp.aux_seed)}};
    spew(dir / "pp.json", j.dump(2) + "\n");
}

PublicParameters read_pp_file(const fs::path& dir) {
    json j;
    try {
        j = json::parse(slurp(dir / "pp.json"));
        Params params(j.at("d").get<std::uint32_t>(), j.at("n").get<std::uint32_t>(),
                      XofId(j.at("xof_id").get<std::uint32_t>()));
        return PublicParameters{params, j.at("scheme_id").get<std::uint8_t>(),
                                from_hex(j.at("public_key").get<std::string>()),
                                from_hex(j.at("aux_seed").get<std::string>())};
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, "pp.json: " + std::string(e.what()));
    }
}

bool is_initialized(const fs::path& dir) {
    return fs::exists(dir / "CURRENT");
}

std::uint64_t read_current_gen(const fs::path& dir) {
    std::string text = slurp(dir / "CURRENT");
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    if (text.rfind("gen-", 0) != 0) raise(ErrorCode::Parse, "CURRENT does not name a generation");
    return std::stoull(text.substr(4));
}

fs::path gen_path(const fs::path& dir, std::uint64_t gen) {
    return dir / ("gen-" + std::to_string(gen));
}

fs::path current_gen_path(const fs::path& dir) {
    return gen_path(dir, read_current_gen(dir));
}

void commit_generation(const fs::path& dir, std::uint64_t gen) {
    atomic_spew(dir / "CURRENT", "gen-" + std::to_string(gen) + "\n");
    // Prune anything older; a crash here only leaves unreferenced dirs.
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("gen-", 0) == 0 && name != "gen-" + std::to_string(gen))
            fs::remove_all(entry.path(), ec);
    }
}

void write_meta(const fs::path& gen_dir, const Meta& meta) {
    json j{{"version", meta.version}, {"floor", meta.floor}, {"role", meta.role}};
    spew(gen_dir / "meta.json", j.dump(2) + "\n");
}

Meta read_meta(const fs::path& gen_dir) {
    try {
        json j = json::parse(slurp(gen_dir / "meta.json"));
        return Meta{j.at("version").get<std::uint64_t>(), j.at("floor").get<std::uint64_t>(),
                    j.at("role").get<std::string>()};
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, "meta.json: " + std::string(e.what()));
    }
}

void write_signature_table(const fs::path& path, const std::map<std::uint64_t, Bytes>& sigs) {
    std::string out;
    for (const auto& [version, sig] : sigs) {
        out += std::to_string(version);
        out += '\t';
        out += to_base64(sig);
        out += '\n';
    }
    spew(path, out);
}

std::map<std::uint64_t, Bytes> read_signature_table(const fs::path& path) {
    std::map<std::uint64_t, Bytes> sigs;
    const std::string text = slurp(path);  // lines_of views into this
    for (std::string_view line : lines_of(text)) {
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) raise(ErrorCode::Parse, "signature line needs 2 fields");
        std::uint64_t version = std::stoull(std::string(line.substr(0, tab)));
        sigs[version] = from_base64(line.substr(tab + 1));
    }
    return sigs;
}

void write_delta_log(const fs::path& path, const UpdateLog& log) {
    std::string out;
    for (std::uint64_t v = log.compaction_floor() + 1; v <= log.head_version(); ++v) {
        out += delta_to_log_line(log.delta_at(v));
        out += '\n';
    }
    spew(path, out);
}

std::vector<UpdateDelta> read_delta_log(const fs::path& path) {
    std::vector<UpdateDelta> deltas;
    const std::string text = slurp(path);  // lines_of views into this
    for (std::string_view line : lines_of(text)) deltas.push_back(delta_from_log_line(line));
    return deltas;
}

void write_signed_digest_file(const fs::path& path, const SignedDigest& sd) {
    spew(path, to_base64(sd.encode()) + "\n");
}

SignedDigest read_signed_digest_file(const fs::path& path, const Params& params) {
    std::string text = slurp(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return SignedDigest::decode(from_base64(text), params);
}

DistributorLogFiles read_distributor_log_files(const fs::path& dir, const PublicParameters& pp) {
    fs::path gen = current_gen_path(dir);
    Meta meta = read_meta(gen);
    SignedDigest current = read_signed_digest_file(gen / "current.signed", pp.hash_params);
    if (current.version != meta.version)
        raise(ErrorCode::Parse, "current.signed version disagrees with meta.json");
    auto sigs = read_signature_table(gen / "signed.tsv");
    auto genesis_it = sigs.find(0);
    if (genesis_it == sigs.end()) raise(ErrorCode::Parse, "signed.tsv is missing the genesis line");

    std::vector<LogEntry> entries;
    for (UpdateDelta& delta : read_delta_log(gen / "log.tsv")) {
        auto sig_it = sigs.find(delta.version);
        if (sig_it == sigs.end())
            raise(ErrorCode::Parse,
                  "signed.tsv is missing version " + std::to_string(delta.version));
        entries.push_back(LogEntry{std::move(delta), sig_it->second});
    }
    UpdateLog log = UpdateLog::restore(meta.floor, std::move(entries));
    return DistributorLogFiles{std::move(current), std::move(genesis_it->second), std::move(log),
                               meta};
}

DistributorFiles read_distributor_files(const fs::path& dir, const PublicParameters& pp) {
    DistributorLogFiles lf = read_distributor_log_files(dir, pp);
    Database db = read_database_fixture(current_gen_path(dir) / "db.tsv", pp.hash_params);
    return DistributorFiles{std::move(db), std::move(lf.current), std::move(lf.genesis_signature),
                            std::move(lf.log), lf.meta};
}

void write_distributor_gen(const fs::path& dir, std::uint64_t gen, const Database& db,
                           const SignedDigest& current, const Bytes& genesis_signature,
                           const UpdateLog& log) {
    fs::path gdir = gen_path(dir, gen);
    fs::create_directories(gdir);
    write_database_fixture(gdir / "db.tsv", db);
    write_delta_log(gdir / "log.tsv", log);
    std::map<std::uint64_t, Bytes> sigs;
    sigs[0] = genesis_signature;
    for (std::uint64_t v = log.compaction_floor() + 1; v <= log.head_version(); ++v)
        sigs[v] = log.signature_at(v);
    write_signature_table(gdir / "signed.tsv", sigs);
    write_signed_digest_file(gdir / "current.signed", current);
    write_digest_file(gdir / "current.hmh", current.digest);
    write_meta(gdir, Meta{current.version, log.compaction_floor(), "distributor"});
}

SubscriberFiles read_subscriber_files(const fs::path& dir, const PublicParameters& pp) {
    fs::path gen = current_gen_path(dir);
    Meta meta = read_meta(gen);
    Database db = read_database_fixture(gen / "db.tsv", pp.hash_params);
    SignedDigest last = read_signed_digest_file(gen / "current.signed", pp.hash_params);
    if (last.version != meta.version)
        raise(ErrorCode::Parse, "current.signed version disagrees with meta.json");
    return SubscriberFiles{std::move(db), std::move(last), meta};
}

void write_subscriber_gen(const fs::path& dir, std::uint64_t gen, const Database& db,
                          const SignedDigest& last) {
    fs::path gdir = gen_path(dir, gen);
    fs::create_directories(gdir);
    write_database_fixture(gdir / "db.tsv", db);
    write_signed_digest_file(gdir / "current.signed", last);
    write_digest_file(gdir / "current.hmh", last.digest);
    write_meta(gdir, Meta{last.version, 0, "subscriber"});
}

}  // namespace hmh::cli
