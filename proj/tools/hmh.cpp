// hmh — homomorphic multiset hashing toolkit.
//
// Subcommands: init, publish, sync, validate, compact, bench, genvectors,
// scenario. Exit codes are a stable contract, documented in the README.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmh/netsim.hpp"
#include "hmh/protocol.hpp"
#include "hmh/xof.hpp"
#include "state_store.hpp"

namespace hmh::cli {
namespace {

using nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::Io:
        case ErrorCode::UnsupportedScheme:
            return 2;
        case ErrorCode::InvalidIndex:
        case ErrorCode::MalformedDelta:
        case ErrorCode::StaleDelta:
        case ErrorCode::MissingRow:
        case ErrorCode::DuplicateIndex:
            return 3;
        case ErrorCode::InvalidRange:
        case ErrorCode::UnknownVersion:
        case ErrorCode::OutOfOrder:
            return 4;
        case ErrorCode::TamperDetected:
        case ErrorCode::CorruptDelta:
            return 5;
        case ErrorCode::LogTruncated:
            return 6;
        case ErrorCode::Parse:
        case ErrorCode::MalformedDigest:
        case ErrorCode::MalformedInput:
        case ErrorCode::IncompatibleParams:
            return 7;
    }
    return 1;
}

struct Output {
    bool records = false;

    void event(const json& j, const std::string& human) const {
        if (records) std::cout << j.dump() << "\n";
        else std::cout << human << "\n";
    }
};

Bytes resolve_entropy(const std::string& entropy_hex) {
    if (!entropy_hex.empty()) {
        Bytes e = from_hex(entropy_hex);
        if (e.size() < 32) raise(ErrorCode::Config, "--entropy-hex must give at least 32 bytes");
        return e;
    }
    std::random_device rd;
    Bytes e(32);
    for (auto& b : e) b = std::uint8_t(rd());
    return e;
}

KeyPair load_secret(const fs::path& dir, const PublicParameters& pp) {
    auto [scheme_id, key] = read_key_file(dir / "secret.key");
    if (scheme_id != pp.scheme_id)
        raise(ErrorCode::Parse, "secret.key scheme does not match pp.json");
    return KeyPair{std::move(key), pp.public_key, scheme_id};
}

// --- init ---

struct InitArgs {
    std::string state_dir;
    std::uint32_t preset = 128;
    std::uint32_t d = 0;
    std::uint32_t n = 0;
    std::string scheme = "ed25519";
    std::string entropy_hex;
};

void cmd_init(const InitArgs& args, const Output& out) {
    fs::path dir(args.state_dir);
    if (is_initialized(dir)) raise(ErrorCode::Config, "state dir is already initialized");
    fs::create_directories(dir);
    LockFile lock(dir);

    Bytes entropy = resolve_entropy(args.entropy_hex);
    const SignatureScheme& scheme = scheme_from_name(args.scheme);

    SetupResult sr = [&] {
        if (args.d != 0 || args.n != 0) {
            if (args.d == 0 || args.n == 0)
                raise(ErrorCode::Config, "--d and --n must be given together");
            Params params(args.d, args.n);
            KeyPair keys = scheme.keygen(entropy);
            Bytes aux_input = to_bytes("HMH-AUX-SEED");
            append(aux_input, entropy);
            return SetupResult{PublicParameters{params, scheme.id(), std::move(keys.public_key),
                                                shake256(aux_input, 16)},
                               std::move(keys.secret_key)};
        }
        return setup(args.preset, entropy, scheme.id());
    }();

    write_pp_file(dir, sr.pp);
    KeyPair keys = scheme.keygen(entropy);
    write_key_file(dir / "secret.key", scheme.id(), keys.secret_key);
    write_key_file(dir / "public.key", scheme.id(), keys.public_key);

    Distributor dist(sr.pp, sr.secret_key);
    write_distributor_gen(dir, 1, dist.db(), dist.current_signed(), dist.genesis_signature(),
                          dist.log());
    commit_generation(dir, 1);

    std::string fp = digest_fingerprint(dist.current_digest());
    out.event(json{{"ev", "init"},
                   {"d", sr.pp.hash_params.d()},
                   {"n", sr.pp.hash_params.n()},
                   {"digest_bytes", sr.pp.hash_params.digest_bytes()},
                   {"scheme", args.scheme},
                   {"version", 0},
                   {"fp", fp}},
              "initialized " + args.state_dir + ": d=" + std::to_string(sr.pp.hash_params.d()) +
                  " n=" + std::to_string(sr.pp.hash_params.n()) + " scheme=" + args.scheme +
                  " version=0 fp=" + fp);
}

// --- publish ---

struct PublishArgs {
    std::string state_dir;
    std::string kind;
    std::uint64_t index = 0;
    std::string old_b64, new_b64, old_str, new_str;
    bool old_set = false, new_set = false;
    std::string workload_file;
    std::uint64_t gen_rows = 0, gen_updates = 0;
    std::string gen_mix = "0.5,0.3,0.2";
    std::uint64_t seed = 0;
};

std::optional<Bytes> payload_from_flags(const std::string& b64, const std::string& str, bool set) {
    if (!set) return std::nullopt;
    if (!b64.empty()) return from_base64(b64);
    return to_bytes(str);
}

std::vector<DeltaBody> parse_workload_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorCode::Io, "cannot open " + path.string());
    std::vector<DeltaBody> actions;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        // kind<TAB>index<TAB>base64(old)<TAB>base64(new): a delta log line
        // without the version column.
        UpdateDelta delta = delta_from_log_line("1\t" + line);
        actions.push_back(std::move(delta.body));
    }
    return actions;
}

std::array<double, 3> parse_mix(const std::string& mix) {
    std::array<double, 3> p{};
    std::stringstream ss(mix);
    std::string field;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, field, ',')) raise(ErrorCode::Config, "--gen-mix needs 3 values");
        p[i] = std::stod(field);
    }
    return p;
}

void cmd_publish(const PublishArgs& args, const Output& out) {
    fs::path dir(args.state_dir);
    LockFile lock(dir);
    PublicParameters pp = read_pp_file(dir);
    KeyPair keys = load_secret(dir, pp);
    std::uint64_t gen = read_current_gen(dir);
    DistributorFiles files = read_distributor_files(dir, pp);
    Distributor dist = Distributor::restore(pp, keys.secret_key, std::move(files.db),
                                            std::move(files.current),
                                            std::move(files.genesis_signature),
                                            std::move(files.log));

    std::vector<DeltaBody> actions;
    if (!args.workload_file.empty()) {
        actions = parse_workload_file(args.workload_file);
    } else if (args.gen_updates > 0 || args.gen_rows > 0) {
        auto mix = parse_mix(args.gen_mix);
        actions = netsim::generate_workload(args.seed, args.gen_rows, args.gen_updates, mix[0],
                                            mix[1], mix[2]);
        // The generator numbers rows from 1; shift past existing rows.
        std::uint64_t offset =
            dist.db().rows.empty() ? 0 : dist.db().rows.rbegin()->first;
        if (offset > 0)
            for (auto& a : actions) a.index += offset;
    } else {
        if (args.kind.empty()) raise(ErrorCode::Config, "publish needs a delta, workload or generator");
        DeltaBody body;
        body.kind = delta_kind_from_name(args.kind);
        body.index = args.index;
        body.old_payload = payload_from_flags(args.old_b64, args.old_str, args.old_set);
        body.new_payload = payload_from_flags(args.new_b64, args.new_str, args.new_set);
        actions.push_back(std::move(body));
    }

    for (const DeltaBody& body : actions) {
        SignedDigest sd = dist.publish(body);
        out.event(json{{"ev", "publish"},
                       {"version", sd.version},
                       {"kind", std::string(delta_kind_name(body.kind))},
                       {"index", body.index},
                       {"fp", digest_fingerprint(sd.digest)}},
                  "published version=" + std::to_string(sd.version) +
                      " kind=" + std::string(delta_kind_name(body.kind)) +
                      " index=" + std::to_string(body.index) +
                      " fp=" + digest_fingerprint(sd.digest));
    }

    write_distributor_gen(dir, gen + 1, dist.db(), dist.current_signed(),
                          dist.genesis_signature(), dist.log());
    commit_generation(dir, gen + 1);
}

// --- sync ---

struct SyncArgs {
    std::string sub_dir;
    std::string dist_dir;
    std::optional<std::uint64_t> from;
    std::optional<std::uint64_t> to;
    bool no_resync = false;
};

void bootstrap_subscriber(const fs::path& sub, const fs::path& dist_dir,
                          const PublicParameters& pp, const DistributorLogFiles& dist_log,
                          const Output& out) {
    fs::create_directories(sub);
    write_pp_file(sub, pp);
    write_key_file(sub / "public.key", pp.scheme_id, pp.public_key);

    if (dist_log.meta.floor == 0) {
        // Normal path: start from the signed empty genesis and sync forward.
        SignedDigest genesis{0, HashVector::zero(pp.hash_params), dist_log.genesis_signature,
                             pp.scheme_id};
        Subscriber boot(pp, genesis);
        write_subscriber_gen(sub, 1, boot.db_replica(), boot.last_signed());
    } else {
        // Genesis deltas are compacted away; adopt a verified snapshot.
        Database db = read_database_fixture(current_gen_path(dist_dir) / "db.tsv", pp.hash_params);
        Subscriber boot(pp, dist_log.current, std::move(db));
        write_subscriber_gen(sub, 1, boot.db_replica(), boot.last_signed());
        out.event(json{{"ev", "full_resync"}, {"version", dist_log.current.version}},
                  "bootstrapped from snapshot at version " +
                      std::to_string(dist_log.current.version));
    }
    commit_generation(sub, 1);
}

void cmd_sync(const SyncArgs& args, const Output& out) {
    fs::path sub(args.sub_dir), dist(args.dist_dir);
    PublicParameters pp = read_pp_file(dist);
    DistributorLogFiles dist_log = read_distributor_log_files(dist, pp);

    fs::create_directories(sub);
    LockFile lock(sub);
    if (!is_initialized(sub)) bootstrap_subscriber(sub, dist, pp, dist_log, out);

    std::uint64_t gen = read_current_gen(sub);
    SubscriberFiles sf = read_subscriber_files(sub, pp);
    Subscriber subscriber(pp, std::move(sf.last), std::move(sf.db));  // validates local state

    std::uint64_t v = args.from.value_or(subscriber.version());
    std::uint64_t w = args.to.value_or(dist_log.current.version);

    if (v == w && v == subscriber.version()) {
        out.event(json{{"ev", "sync"}, {"version", v}, {"status", "already-current"}},
                  "already current at version " + std::to_string(v));
        return;
    }
    if (w <= v) raise(ErrorCode::InvalidRange, "target version must exceed current version");
    if (w > dist_log.current.version)
        raise(ErrorCode::UnknownVersion, "distributor head is " +
                                             std::to_string(dist_log.current.version) +
                                             ", requested " + std::to_string(w));

    try {
        std::vector<UpdateDelta> deltas = dist_log.log.range(v, w);
        SignedDigest signed_w{w, digest_at_version(dist_log.current, dist_log.log, w, pp.hash_params),
                              dist_log.log.signature_at(w), pp.scheme_id};
        subscriber.apply_updates(deltas, signed_w);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::LogTruncated || args.no_resync) throw;
        // Requested range is compacted away: adopt a verified snapshot.
        Database db = read_database_fixture(current_gen_path(dist) / "db.tsv", pp.hash_params);
        subscriber.full_resync(std::move(db), dist_log.current);
        out.event(json{{"ev", "full_resync"}, {"version", subscriber.version()}},
                  "log truncated; full resync to version " + std::to_string(subscriber.version()));
    }

    write_subscriber_gen(sub, gen + 1, subscriber.db_replica(), subscriber.last_signed());
    commit_generation(sub, gen + 1);

    ValidationResult vr = subscriber.validate();
    std::string fp = digest_fingerprint(subscriber.digest());
    out.event(json{{"ev", "sync"},
                   {"version", subscriber.version()},
                   {"status", "converged"},
                   {"validated", vr.ok},
                   {"fp", fp}},
              "synced to version " + std::to_string(subscriber.version()) + " fp=" + fp +
                  (vr.ok ? " (validated)" : " (VALIDATION FAILED)"));
    if (!vr.ok) raise(ErrorCode::TamperDetected, "post-sync validation failed");
}

// --- validate ---

void cmd_validate(const std::string& state_dir, const Output& out) {
    fs::path dir(state_dir);
    PublicParameters pp = read_pp_file(dir);
    fs::path gen = current_gen_path(dir);
    Database db = read_database_fixture(gen / "db.tsv", pp.hash_params);
    SignedDigest stored = read_signed_digest_file(gen / "current.signed", pp.hash_params);

    Digest recomputed = full_hash(db);
    bool digest_match = recomputed == stored.digest;
    bool signature_ok = verify_signed_digest(
        SignedDigest{stored.version, recomputed, stored.signature, stored.scheme_id},
        pp.public_key);
    bool ok = digest_match && signature_ok;

    std::string got = digest_fingerprint(recomputed);
    std::string want = digest_fingerprint(stored.digest);
    out.event(json{{"ev", "validate"},
                   {"version", stored.version},
                   {"rows", db.row_count()},
                   {"digest_match", digest_match},
                   {"signature_ok", signature_ok},
                   {"ok", ok},
                   {"recomputed_fp", got},
                   {"expected_fp", want}},
              ok ? "valid: version=" + std::to_string(stored.version) +
                       " rows=" + std::to_string(db.row_count()) + " fp=" + got
                 : "INVALID: digest_match=" + std::to_string(digest_match) +
                       " signature_ok=" + std::to_string(signature_ok) + " recomputed=" + got +
                       " expected=" + want);
    if (!ok) raise(ErrorCode::TamperDetected, "replica does not match its signed digest");
}

// --- compact ---

void cmd_compact(const std::string& state_dir, std::uint64_t keep_last, const Output& out) {
    fs::path dir(state_dir);
    LockFile lock(dir);
    PublicParameters pp = read_pp_file(dir);
    std::uint64_t gen = read_current_gen(dir);
    DistributorFiles files = read_distributor_files(dir, pp);
    std::uint64_t head = files.current.version;
    std::uint64_t floor = head > keep_last ? head - keep_last : 0;
    files.log.compact(floor);
    write_distributor_gen(dir, gen + 1, files.db, files.current, files.genesis_signature,
                          files.log);
    commit_generation(dir, gen + 1);
    out.event(json{{"ev", "compact"}, {"floor", files.log.compaction_floor()}, {"version", head}},
              "compacted log to floor " + std::to_string(files.log.compaction_floor()));
}

// --- bench ---

struct BenchArgs {
    std::string sizes = "1000,100000";
    std::uint64_t reps = 100;
    std::string scheme = "ed25519";
    std::string csv_path;
    std::uint64_t seed = 42;
};

struct Stats {
    double p50, p95, mean;
};

Stats stats_of(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    auto at = [&](double q) { return samples[std::size_t(q * double(samples.size() - 1))]; };
    double sum = 0;
    for (double s : samples) sum += s;
    return Stats{at(0.50), at(0.95), sum / double(samples.size())};
}

void cmd_bench(const BenchArgs& args, const Output&) {
    std::vector<std::uint64_t> sizes;
    {
        std::stringstream ss(args.sizes);
        std::string field;
        while (std::getline(ss, field, ',')) sizes.push_back(std::stoull(field));
    }
    if (sizes.empty() || args.reps == 0) raise(ErrorCode::Config, "need sizes and reps");

    Params params(16, 1024);
    const SignatureScheme& scheme = scheme_from_name(args.scheme);
    Bytes entropy(32, 0x5a);
    KeyPair keys = scheme.keygen(entropy);
    std::mt19937_64 rng(args.seed);

    std::string csv = "N,op,p50_us,p95_us,mean_us\n";
    auto emit_row = [&](std::uint64_t n, const char* op, const Stats& st) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%llu,%s,%.3f,%.3f,%.3f\n",
                      static_cast<unsigned long long>(n), op, st.p50, st.p95, st.mean);
        csv += buf;
    };
    using clock = std::chrono::steady_clock;
    auto us_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::micro>(clock::now() - t0).count();
    };

    for (std::uint64_t n_rows : sizes) {
        Database db(params);
        for (std::uint64_t i = 1; i <= n_rows; ++i) {
            Bytes payload(16);
            for (auto& b : payload) b = std::uint8_t(rng());
            db.rows.emplace_hint(db.rows.end(), i, std::move(payload));
        }
        Digest digest = full_hash(db);
        std::uint64_t version = 1;

        // Publish path the complexity analysis talks about: two expands, a
        // vector fold and one signature. No row-store touch.
        std::vector<double> publish_samples;
        publish_samples.reserve(args.reps);
        for (std::uint64_t r = 0; r < args.reps; ++r) {
            std::uint64_t index = 1 + rng() % n_rows;
            Bytes new_payload(16);
            for (auto& b : new_payload) b = std::uint8_t(rng());
            DeltaBody body = DeltaBody::modify(index, db.rows[index], std::move(new_payload));
            auto t0 = clock::now();
            Digest next = vec_add(digest, delta_hash(body, params));
            SignedDigest sd = make_signed_digest(scheme, keys.secret_key, version, std::move(next));
            publish_samples.push_back(us_since(t0));
            (void)sd;
        }
        emit_row(n_rows, "publish", stats_of(std::move(publish_samples)));

        // Subscriber apply path per delta, batch of 100 with one signature
        // verify amortized across the batch.
        const std::uint64_t batch = 100;
        std::vector<double> apply_samples;
        for (std::uint64_t r = 0; r < std::max<std::uint64_t>(1, args.reps / 10); ++r) {
            std::vector<UpdateDelta> deltas;
            Digest server = digest;
            for (std::uint64_t k = 0; k < batch; ++k) {
                std::uint64_t index = 1 + rng() % n_rows;
                Bytes new_payload(16);
                for (auto& b : new_payload) b = std::uint8_t(rng());
                DeltaBody body = DeltaBody::modify(index, db.rows[index], std::move(new_payload));
                server = vec_add(server, delta_hash(body, params));
                deltas.push_back(UpdateDelta{version + k, std::move(body)});
            }
            SignedDigest sd =
                make_signed_digest(scheme, keys.secret_key, version + batch - 1, std::move(server));
            auto t0 = clock::now();
            Digest folded = digest;
            for (const UpdateDelta& delta : deltas)
                folded = vec_add(folded, delta_hash(delta, params));
            bool ok = folded == sd.digest && verify_signed_digest(sd, keys.public_key);
            double total = us_since(t0);
            if (!ok) raise(ErrorCode::TamperDetected, "bench apply failed verification");
            apply_samples.push_back(total / double(batch));
        }
        emit_row(n_rows, "apply", stats_of(std::move(apply_samples)));

        // Validate path: full O(N) recompute plus one verification.
        std::uint64_t vreps = std::max<std::uint64_t>(
            1, std::min<std::uint64_t>(args.reps, 2'000'000 / std::max<std::uint64_t>(1, n_rows)));
        SignedDigest current = make_signed_digest(scheme, keys.secret_key, version, digest);
        std::vector<double> validate_samples;
        for (std::uint64_t r = 0; r < vreps; ++r) {
            auto t0 = clock::now();
            Digest recomputed = full_hash(db);
            bool ok = recomputed == current.digest && verify_signed_digest(current, keys.public_key);
            validate_samples.push_back(us_since(t0));
            if (!ok) raise(ErrorCode::TamperDetected, "bench validate failed");
        }
        emit_row(n_rows, "validate", stats_of(std::move(validate_samples)));
    }

    std::cout << csv;
    if (!args.csv_path.empty()) {
        std::ofstream f(args.csv_path, std::ios::trunc);
        if (!f) raise(ErrorCode::Io, "cannot open " + args.csv_path);
        f << csv;
    }
}

// --- genvectors ---

struct GenVectorsArgs {
    std::uint32_t d = 16;
    std::uint32_t n = 1024;
    std::string inputs;
    bool worked_example = false;
    std::string out_path;
};

void cmd_genvectors(const GenVectorsArgs& args, const Output&) {
    Params params(args.d, args.n);
    std::string out = "params\td=" + std::to_string(params.d()) + ",n=" + std::to_string(params.n()) +
                      ",xof=" + std::to_string(std::uint32_t(params.xof_id())) + "\n";

    auto line = [&](const std::string& label, const Digest& digest) {
        out += label + "\t" + to_hex(digest_serialize(digest)) + "\n";
    };

    if (args.worked_example) {
        Digest h1 = expand(encode_row(1, to_bytes("apple")), params);
        Digest h2 = expand(encode_row(2, to_bytes("orange")), params);
        Digest h3 = expand(encode_row(3, to_bytes("banana")), params);
        Digest hd = vec_add(vec_add(h1, h2), h3);
        DeltaBody peach = DeltaBody::modify(2, to_bytes("orange"), to_bytes("peach"));
        Digest delta = delta_hash(peach, params);
        Digest hd_star = vec_add(hd, delta);
        line("h1", h1);
        line("h2", h2);
        line("h3", h3);
        line("H_D", hd);
        line("delta_modify_2_orange_peach", delta);
        line("H_Dstar", hd_star);
    }
    if (!args.inputs.empty()) {
        std::ifstream f(args.inputs);
        if (!f) raise(ErrorCode::Io, "cannot open " + args.inputs);
        std::string text_line;
        while (std::getline(f, text_line)) {
            if (text_line.empty()) continue;
            std::size_t tab = text_line.find('\t');
            if (tab == std::string::npos) raise(ErrorCode::Parse, "inputs line needs label<TAB>hex");
            line(text_line.substr(0, tab), expand(from_hex(text_line.substr(tab + 1)), params));
        }
    }

    if (args.out_path.empty()) {
        std::cout << out;
    } else {
        std::ofstream f(args.out_path, std::ios::trunc);
        if (!f) raise(ErrorCode::Io, "cannot open " + args.out_path);
        f << out;
    }
}

// --- scenario ---

void cmd_scenario(const std::string& config_path, bool require_converged, const Output& out) {
    std::ifstream f(config_path);
    if (!f) raise(ErrorCode::Io, "cannot open " + config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    netsim::ScenarioConfig config = netsim::scenario_config_from_json(ss.str());
    netsim::ScenarioReport report = netsim::run_scenario(config);

    if (out.records) {
        std::cout << netsim::scenario_report_to_json_lines(report);
    } else {
        std::cout << "scenario: " << report.outcomes.size() << " subscribers, final version "
                  << report.final_version << ", dist fp " << report.distributor_fingerprint << "\n";
        for (const auto& o : report.outcomes) {
            std::cout << "  subscriber " << o.subscriber << ": "
                      << netsim::outcome_status_name(o.status) << " version=" << o.version;
            if (!o.error_class.empty())
                std::cout << " class=" << o.error_class << " at_version=" << o.at_version;
            std::cout << " fp=" << o.digest_fingerprint << "\n";
        }
        if (!report.publish_us.empty()) {
            double sum = 0;
            for (double s : report.publish_us) sum += s;
            std::printf("publish mean: %.1f us over %zu samples\n",
                        sum / double(report.publish_us.size()), report.publish_us.size());
        }
        std::cout << "transcript hash: " << report.transcript_hash << "\n";
    }
    if (require_converged && !report.all_converged())
        raise(ErrorCode::TamperDetected, "scenario did not converge on all subscribers");
}

int run(int argc, char** argv) {
    CLI::App app{"Homomorphic multiset hashing toolkit: incremental database digests with "
                 "signed update propagation"};
    app.require_subcommand(1);

    Output out;
    std::string output_mode = "text";
    app.add_option("--output", output_mode, "Output style: text or records")
        ->check(CLI::IsMember({"text", "records"}));

    InitArgs init_args;
    auto* init = app.add_subcommand("init", "Create a distributor state directory");
    init->add_option("--state-dir", init_args.state_dir)->required();
    init->add_option("--params-preset", init_args.preset, "Security level preset")
        ->check(CLI::IsMember({128, 192, 256}));
    init->add_option("--d", init_args.d, "Bits per component (with --n, overrides the preset)");
    init->add_option("--n", init_args.n, "Vector dimension");
    init->add_option("--scheme", init_args.scheme)->check(CLI::IsMember({"ed25519", "nullsig"}));
    init->add_option("--entropy-hex", init_args.entropy_hex,
                     "Hex entropy (>= 32 bytes) for reproducible keys");

    PublishArgs pub_args;
    auto* publish = app.add_subcommand("publish", "Apply deltas and sign the new digest");
    publish->add_option("--state-dir", pub_args.state_dir)->required();
    publish->add_option("--kind", pub_args.kind)->check(CLI::IsMember({"modify", "insert", "delete"}));
    publish->add_option("--index", pub_args.index);
    auto* ob = publish->add_option("--old-b64", pub_args.old_b64);
    auto* os = publish->add_option("--old-str", pub_args.old_str);
    auto* nb = publish->add_option("--new-b64", pub_args.new_b64);
    auto* ns = publish->add_option("--new-str", pub_args.new_str);
    publish->add_option("--workload", pub_args.workload_file,
                        "File of kind<TAB>index<TAB>b64old<TAB>b64new lines");
    publish->add_option("--gen-rows", pub_args.gen_rows, "Generated workload: initial inserts");
    publish->add_option("--gen-updates", pub_args.gen_updates, "Generated workload: update count");
    publish->add_option("--gen-mix", pub_args.gen_mix, "modify,insert,delete probabilities");
    publish->add_option("--seed", pub_args.seed);

    SyncArgs sync_args;
    std::uint64_t sync_from = 0, sync_to = 0;
    auto* sync = app.add_subcommand("sync", "Pull signed deltas from a distributor directory");
    sync->add_option("--sub-dir", sync_args.sub_dir)->required();
    sync->add_option("--dist-dir", sync_args.dist_dir)->required();
    auto* from_opt = sync->add_option("--from", sync_from, "Start version (default: replica's)");
    auto* to_opt = sync->add_option("--to", sync_to, "Target version (default: distributor head)");
    sync->add_flag("--no-resync", sync_args.no_resync,
                   "Fail on truncated logs instead of copying a snapshot");

    std::string validate_dir;
    auto* validate = app.add_subcommand("validate", "Full O(N) recompute and signature audit");
    validate->add_option("--state-dir", validate_dir)->required();

    std::string compact_dir;
    std::uint64_t keep_last = 0;
    auto* compact = app.add_subcommand("compact", "Drop log entries older than the last K versions");
    compact->add_option("--state-dir", compact_dir)->required();
    compact->add_option("--keep-last", keep_last)->required();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Measure publish/apply/validate latency");
    bench->add_option("--sizes", bench_args.sizes, "Comma-separated row counts");
    bench->add_option("--reps", bench_args.reps);
    bench->add_option("--scheme", bench_args.scheme)->check(CLI::IsMember({"ed25519", "nullsig"}));
    bench->add_option("--csv", bench_args.csv_path, "Also write the CSV here");
    bench->add_option("--seed", bench_args.seed);

    GenVectorsArgs gv_args;
    auto* genvectors = app.add_subcommand("genvectors", "Freeze expand/digest test vectors");
    genvectors->add_option("--d", gv_args.d);
    genvectors->add_option("--n", gv_args.n);
    genvectors->add_option("--inputs", gv_args.inputs, "File of label<TAB>hex lines");
    genvectors->add_flag("--worked-example", gv_args.worked_example,
                         "Emit the three-row modify walkthrough vectors");
    genvectors->add_option("--out", gv_args.out_path);

    std::string scenario_config;
    bool require_converged = false;
    auto* scenario = app.add_subcommand("scenario", "Run a fault-injection scenario");
    scenario->add_option("--config", scenario_config)->required();
    scenario->add_flag("--require-converged", require_converged);

    // Let `hmh <sub> --output records` reach the parent-level option.
    for (auto* sc : app.get_subcommands({})) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);
    out.records = output_mode == "records";

    pub_args.old_set = ob->count() > 0 || os->count() > 0;
    pub_args.new_set = nb->count() > 0 || ns->count() > 0;

    if (init->parsed()) cmd_init(init_args, out);
    if (publish->parsed()) cmd_publish(pub_args, out);
    if (sync->parsed()) {
        if (from_opt->count() > 0) sync_args.from = sync_from;
        if (to_opt->count() > 0) sync_args.to = sync_to;
        cmd_sync(sync_args, out);
    }
    if (validate->parsed()) cmd_validate(validate_dir, out);
    if (compact->parsed()) cmd_compact(compact_dir, keep_last, out);
    if (bench->parsed()) cmd_bench(bench_args, out);
    if (genvectors->parsed()) cmd_genvectors(gv_args, out);
    if (scenario->parsed()) cmd_scenario(scenario_config, require_converged, out);
    return 0;
}

}  // namespace
}  // namespace hmh::cli

int main(int argc, char** argv) {
    try {
        return hmh::cli::run(argc, argv);
    } catch (const hmh::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hmh::cli::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
