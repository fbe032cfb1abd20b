#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>

#include "hmh/protocol.hpp"
#include "test_util.hpp"

using namespace hmh;

namespace {

Bytes test_entropy(std::uint8_t fill = 0x77) {
    return Bytes(32, fill);
}

/// Fresh distributor over the fast test scheme.
Distributor make_dist(std::uint8_t scheme_id = kSchemeNullSig) {
    SetupResult sr = setup(128, test_entropy(), scheme_id);
    return Distributor(sr.pp, sr.secret_key);
}

DeltaBody apple() { return DeltaBody::insert(1, to_bytes("apple")); }
DeltaBody orange() { return DeltaBody::insert(2, to_bytes("orange")); }
DeltaBody banana() { return DeltaBody::insert(3, to_bytes("banana")); }
DeltaBody peach() { return DeltaBody::modify(2, to_bytes("orange"), to_bytes("peach")); }

/// The version-0 signed digest a subscriber joins from.
SignedDigest genesis_of(const Distributor& dist) {
    return SignedDigest{0, HashVector::zero(dist.pp().hash_params), dist.genesis_signature(),
                        dist.pp().scheme_id};
}

}  // namespace

TEST_CASE("setup maps security levels to parameter presets deterministically") {
    SetupResult a = setup(128, test_entropy());
    CHECK(a.pp.hash_params.d() == 16);
    CHECK(a.pp.hash_params.n() == 1024);
    CHECK(a.pp.hash_params.q() == 65536);
    CHECK(a.pp.scheme_id == kSchemeEd25519);
    CHECK(a.pp.aux_seed.size() == 16);

    SetupResult b = setup(128, test_entropy());
    CHECK(a.pp.public_key == b.pp.public_key);
    CHECK(a.pp.aux_seed == b.pp.aux_seed);
    CHECK(a.secret_key == b.secret_key);

    SetupResult lvl192 = setup(192, test_entropy());
    CHECK(lvl192.pp.hash_params.n() == 2048);
    CHECK(lvl192.pp.hash_params.digest_bytes() == 2 * a.pp.hash_params.digest_bytes());
    CHECK(setup(256, test_entropy()).pp.hash_params.n() == 4096);

    CHECK_THROWS_AS(setup(100, test_entropy()), Error);
    CHECK_THROWS_AS(setup(128, Bytes(8, 1)), Error);
}

TEST_CASE("genesis: version 0 is the signed empty database") {
    Distributor dist = make_dist();
    CHECK(dist.current_version() == 0);
    CHECK(dist.current_digest() == HashVector::zero(dist.pp().hash_params));
    CHECK(dist.db().row_count() == 0);
    CHECK(dist.audit());
}

TEST_CASE("publish walks the worked example") {
    Distributor dist = make_dist(kSchemeEd25519);
    dist.publish(apple());
    dist.publish(orange());
    SignedDigest v3 = dist.publish(banana());
    CHECK(v3.version == 3);
    CHECK(digest_fingerprint(v3.digest) == "bb7a021e060c2890");  // frozen H(D)
    CHECK(v3.digest == full_hash(dist.db()));

    SignedDigest v4 = dist.publish(peach());
    CHECK(v4.version == 4);
    CHECK(digest_fingerprint(v4.digest) == "c5b65edcd283d4f3");  // frozen H(D*)
    CHECK(v4.digest == full_hash(dist.db()));
    CHECK(dist.db().rows.at(2) == to_bytes("peach"));
    CHECK(dist.audit());
}

TEST_CASE("no-op modify changes the version but not the digest") {
    Distributor dist = make_dist();
    dist.publish(apple());
    Digest before = dist.current_digest();
    SignedDigest sd = dist.publish(DeltaBody::modify(1, to_bytes("apple"), to_bytes("apple")));
    CHECK(sd.version == 2);
    CHECK(sd.digest == before);
}

TEST_CASE("a rejected publish leaves the distributor untouched") {
    Distributor dist = make_dist();
    dist.publish(apple());
    Digest digest = dist.current_digest();

    CHECK_THROWS_AS(dist.publish(DeltaBody::insert(1, to_bytes("dup"))), Error);
    CHECK_THROWS_AS(dist.publish(DeltaBody::remove(9, to_bytes("x"))), Error);
    CHECK(dist.current_version() == 1);
    CHECK(dist.current_digest() == digest);
    CHECK(dist.log().head_version() == 1);
    CHECK(dist.audit());
}

TEST_CASE("random publishes always match a full recompute") {
    std::mt19937_64 rng(31);
    Distributor dist = make_dist();
    std::uint64_t next_index = 1;
    for (int i = 0; i < 1000; ++i) {
        DeltaBody body = test::rand_applicable_delta(rng, dist.db(), next_index);
        SignedDigest sd = dist.publish(body);
        CHECK(sd.version == std::uint64_t(i + 1));
        if (i % 100 == 99) CHECK(dist.current_digest() == full_hash(dist.db()));
    }
    CHECK(dist.current_digest() == full_hash(dist.db()));
    CHECK(dist.audit());
}

TEST_CASE("get_updates serves ranges with historical signed digests") {
    Distributor dist = make_dist();
    dist.publish(apple());
    dist.publish(orange());
    dist.publish(banana());

    auto [deltas, signed_w] = dist.get_updates(0, 3);
    CHECK(deltas.size() == 3);
    CHECK(deltas.front().version == 1);
    CHECK(deltas.back().version == 3);
    CHECK(signed_w.version == 3);
    CHECK(signed_w == dist.current_signed());

    auto [one, signed_two] = dist.get_updates(1, 2);
    CHECK(one.size() == 1);
    CHECK(one[0].version == 2);
    CHECK(signed_two.version == 2);
    // Historical digest is rebuilt exactly and its stored signature verifies.
    CHECK(verify_signed_digest(signed_two, dist.pp().public_key));

    try {
        dist.get_updates(5, 3);
        FAIL("expected invalid-range");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidRange);
    }
    CHECK_THROWS_AS(dist.get_updates(3, 3), Error);
    try {
        dist.get_updates(2, 9);
        FAIL("expected unknown-version");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownVersion);
    }
}

TEST_CASE("compaction turns old ranges into explicit log-truncated errors") {
    Distributor dist = make_dist();
    for (int i = 0; i < 10; ++i) dist.publish(DeltaBody::insert(std::uint64_t(i + 1), to_bytes("x")));
    dist.compact_log(4);
    CHECK(dist.log().compaction_floor() == 4);
    CHECK(dist.log().size() == 6);
    CHECK_THROWS_AS(dist.compact_log(99), Error);  // beyond the head

    auto [deltas, sd] = dist.get_updates(4, 10);  // still retained
    CHECK(deltas.size() == 6);
    CHECK(sd.version == 10);

    try {
        dist.get_updates(3, 10);
        FAIL("expected log-truncated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LogTruncated);
    }

    // Recovery path: adopt a verified snapshot.
    Subscriber behind(dist.pp(), genesis_of(dist));
    auto [db, snapshot_signed] = dist.snapshot();
    behind.full_resync(std::move(db), snapshot_signed);
    CHECK(behind.version() == 10);
    CHECK(behind.validate().ok);
}

TEST_CASE("subscriber applies the worked example and validates") {
    SetupResult sr = setup(128, test_entropy(), kSchemeEd25519);
    Distributor dist(sr.pp, sr.secret_key);
    Subscriber sub(sr.pp, dist.current_signed());

    dist.publish(apple());
    dist.publish(orange());
    dist.publish(banana());
    auto [d1, s1] = dist.get_updates(0, 3);
    sub.apply_updates(d1, s1);
    CHECK(sub.version() == 3);
    CHECK(digest_fingerprint(sub.digest()) == "bb7a021e060c2890");

    dist.publish(peach());
    auto [d2, s2] = dist.get_updates(3, 4);
    sub.apply_updates(d2, s2);
    CHECK(sub.version() == 4);
    CHECK(sub.digest() == dist.current_digest());
    CHECK(sub.db_replica() == dist.db());

    ValidationResult vr = sub.validate();
    CHECK(vr.ok);
    CHECK(vr.digest_match);
    CHECK(vr.signature_ok);
}

TEST_CASE("empty batch with the current signed digest is a verified no-op") {
    Distributor dist = make_dist();
    dist.publish(apple());
    Subscriber sub(dist.pp(), genesis_of(dist));

    // Wrong-version empty batch is out-of-order.
    CHECK_THROWS_AS(sub.apply_updates({}, dist.current_signed()), Error);

    auto [deltas, sd] = dist.get_updates(0, 1);
    sub.apply_updates(deltas, sd);
    Database replica_before = sub.db_replica();
    sub.apply_updates({}, sd);  // same version: verified, nothing changes
    CHECK(sub.version() == 1);
    CHECK(sub.db_replica() == replica_before);
}

namespace {

struct SubscriberSnapshot {
    std::uint64_t version;
    Bytes digest_bytes;
    std::string db_text;
    Bytes signature;
};

SubscriberSnapshot snap(const Subscriber& sub) {
    return {sub.version(), digest_serialize(sub.digest()), database_to_fixture(sub.db_replica()),
            sub.last_signed().signature};
}

bool operator==(const SubscriberSnapshot& a, const SubscriberSnapshot& b) {
    return a.version == b.version && a.digest_bytes == b.digest_bytes && a.db_text == b.db_text &&
           a.signature == b.signature;
}

}  // namespace

TEST_CASE("apply_updates rejects gaps, tampered deltas and mismatched signatures atomically") {
    std::mt19937_64 rng(32);
    Distributor dist = make_dist();
    Subscriber sub(dist.pp(), dist.current_signed());

    std::uint64_t next_index = 1;
    for (int i = 0; i < 6; ++i) dist.publish(test::rand_applicable_delta(rng, dist.db(), next_index));
    auto [first_three, s3] = dist.get_updates(0, 3);
    sub.apply_updates(first_three, s3);
    SubscriberSnapshot before = snap(sub);

    auto [rest, s6] = dist.get_updates(3, 6);

    SUBCASE("version gap") {
        auto [gap, s56] = dist.get_updates(4, 6);
        try {
            sub.apply_updates(gap, s56);
            FAIL("expected out-of-order");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OutOfOrder);
        }
    }
    SUBCASE("tampered delta payload") {
        auto tampered = rest;
        Bytes& payload = tampered[1].body.new_payload ? *tampered[1].body.new_payload
                                                      : *tampered[1].body.old_payload;
        if (payload.empty()) payload.push_back(0);
        payload[0] ^= 0x01;
        try {
            sub.apply_updates(tampered, s6);
            FAIL("expected tamper-detected");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TamperDetected);
        }
    }
    SUBCASE("tampered signed digest bytes") {
        SignedDigest forged = s6;
        auto comps = std::vector<std::uint32_t>(forged.digest.components().begin(),
                                                forged.digest.components().end());
        comps[0] ^= 1;
        forged.digest = HashVector::from_components(dist.pp().hash_params, comps);
        CHECK_THROWS_AS(sub.apply_updates(rest, forged), Error);
    }
    SUBCASE("forged signature") {
        SignedDigest forged = s6;
        forged.signature[3] ^= 0x10;
        try {
            sub.apply_updates(rest, forged);
            FAIL("expected tamper-detected");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TamperDetected);
        }
    }
    SUBCASE("replayed signed digest from another version") {
        // Deltas 4..6 paired with the version-3 signed digest: rejected by
        // version binding before any crypto.
        try {
            sub.apply_updates(rest, s3);
            FAIL("expected out-of-order");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OutOfOrder);
        }
    }
    SUBCASE("reordered batch contents") {
        auto shuffled = rest;
        std::swap(shuffled[0], shuffled[2]);
        try {
            sub.apply_updates(shuffled, s6);
            FAIL("expected out-of-order");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OutOfOrder);
        }
    }

    CHECK(snap(sub) == before);  // bit-identical after every rejection
    sub.apply_updates(rest, s6);  // the honest batch still applies
    CHECK(sub.version() == 6);
    CHECK(sub.validate().ok);
}

TEST_CASE("a correctly signed batch that violates row preconditions is corrupt, not applied") {
    // Only reachable with a signing key: the digest folds and verifies, but
    // the second insert collides with the first in the row store.
    SetupResult sr = setup(128, test_entropy(), kSchemeNullSig);
    Distributor dist(sr.pp, sr.secret_key);
    Subscriber sub(sr.pp, dist.current_signed());

    std::vector<UpdateDelta> deltas{
        UpdateDelta{1, DeltaBody::insert(1, to_bytes("a"))},
        UpdateDelta{2, DeltaBody::insert(1, to_bytes("b"))},  // duplicate index
    };
    Digest folded = dist.current_digest();
    for (const UpdateDelta& d : deltas) folded = vec_add(folded, delta_hash(d, sr.pp.hash_params));
    SignedDigest sd =
        make_signed_digest(scheme_from_id(sr.pp.scheme_id), sr.secret_key, 2, std::move(folded));

    try {
        sub.apply_updates(deltas, sd);
        FAIL("expected corrupt-delta");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptDelta);
    }
    CHECK(sub.version() == 0);
    CHECK(sub.db_replica().row_count() == 0);
}

TEST_CASE("log restore refuses gaps") {
    SetupResult sr = setup(128, test_entropy(), kSchemeNullSig);
    Distributor dist(sr.pp, sr.secret_key);
    dist.publish(apple());
    dist.publish(orange());
    dist.publish(banana());

    std::vector<LogEntry> gappy{
        LogEntry{dist.log().delta_at(1), dist.log().signature_at(1)},
        LogEntry{dist.log().delta_at(3), dist.log().signature_at(3)},
    };
    CHECK_THROWS_AS(UpdateLog::restore(0, std::move(gappy)), Error);

    std::vector<LogEntry> wrong_floor{
        LogEntry{dist.log().delta_at(2), dist.log().signature_at(2)},
    };
    CHECK_THROWS_AS(UpdateLog::restore(0, std::move(wrong_floor)), Error);
}

TEST_CASE("batch-split equivalence: any consecutive partition reaches the same state") {
    std::mt19937_64 rng(33);
    Distributor dist = make_dist();
    std::uint64_t next_index = 1;
    for (int i = 0; i < 60; ++i) dist.publish(test::rand_applicable_delta(rng, dist.db(), next_index));

    Subscriber whole(dist.pp(), genesis_of(dist));
    auto [all, s_all] = dist.get_updates(0, 60);
    whole.apply_updates(all, s_all);

    for (int trial = 0; trial < 5; ++trial) {
        Subscriber pieces(dist.pp(), genesis_of(dist));
        std::uint64_t at = 0;
        while (at < 60) {
            std::uint64_t step = 1 + rng() % 12;
            std::uint64_t to = std::min<std::uint64_t>(60, at + step);
            auto [deltas, sd] = dist.get_updates(at, to);
            pieces.apply_updates(deltas, sd);
            at = to;
        }
        CHECK(pieces.version() == whole.version());
        CHECK(pieces.digest() == whole.digest());
        CHECK(pieces.db_replica() == whole.db_replica());
        CHECK(pieces.last_signed() == whole.last_signed());
    }
}

TEST_CASE("validate reports both checks; tampered rows never get adopted") {
    Distributor dist = make_dist();
    dist.publish(apple());
    Subscriber sub(dist.pp(), genesis_of(dist));
    auto [deltas, sd] = dist.get_updates(0, 1);
    sub.apply_updates(deltas, sd);

    ValidationResult vr = sub.validate();
    CHECK(vr.ok);
    CHECK(vr.digest_match);
    CHECK(vr.signature_ok);
    CHECK(vr.recomputed_fingerprint == vr.expected_fingerprint);

    // Every door into the subscriber verifies first, so a tampered replica
    // is refused rather than adopted. (Disk-level tampering of a persisted
    // replica is covered by the CLI validate tests.)
    Database tampered = sub.db_replica();
    tampered.rows[1][0] ^= 0x01;
    CHECK_THROWS_AS(sub.full_resync(tampered, sd), Error);
    CHECK_THROWS_AS(Subscriber(dist.pp(), sd, tampered), Error);
}

TEST_CASE("soak: ten thousand updates synced in batches validate at the end") {
    std::mt19937_64 rng(34);
    Distributor dist = make_dist();
    Subscriber sub(dist.pp(), dist.current_signed());
    std::uint64_t next_index = 1;

    for (int round = 0; round < 100; ++round) {
        for (int i = 0; i < 100; ++i)
            dist.publish(test::rand_applicable_delta(rng, dist.db(), next_index));
        auto [deltas, sd] = dist.get_updates(sub.version(), dist.current_version());
        sub.apply_updates(deltas, sd);
    }
    CHECK(sub.version() == 10000);
    CHECK(sub.digest() == dist.current_digest());
    ValidationResult vr = sub.validate();
    CHECK(vr.ok);
    CHECK(full_hash(sub.db_replica()) == sub.digest());
}

TEST_CASE("one batch of 100 deltas costs no more than a small multiple of 100 singles") {
    std::mt19937_64 rng(37);
    Distributor dist = make_dist();
    std::uint64_t next_index = 1;
    for (int i = 0; i < 100; ++i) dist.publish(test::rand_applicable_delta(rng, dist.db(), next_index));

    using clock = std::chrono::steady_clock;
    auto us_of = [](auto&& fn) {
        auto t0 = clock::now();
        fn();
        return std::chrono::duration<double, std::micro>(clock::now() - t0).count();
    };

    Subscriber batched(dist.pp(), genesis_of(dist));
    auto [all, s_all] = dist.get_updates(0, 100);
    double batch_us = us_of([&] { batched.apply_updates(all, s_all); });

    Subscriber single(dist.pp(), genesis_of(dist));
    std::vector<std::pair<std::vector<UpdateDelta>, SignedDigest>> steps;
    for (std::uint64_t v = 0; v < 100; ++v) steps.push_back(dist.get_updates(v, v + 1));
    double singles_us = us_of([&] {
        for (auto& [deltas, sd] : steps) single.apply_updates(deltas, sd);
    });

    CHECK(batched.digest() == single.digest());
    CHECK(batched.db_replica() == single.db_replica());
    // The batch folds the same 100 deltas with one verification instead of
    // 100; it must never degrade superlinearly against the singles path.
    CHECK(batch_us < 3.0 * singles_us);
}

TEST_CASE("distributor restore rebuilds an equivalent state and audits it") {
    std::mt19937_64 rng(35);
    SetupResult sr = setup(128, test_entropy(), kSchemeNullSig);
    Distributor dist(sr.pp, sr.secret_key);
    std::uint64_t next_index = 1;
    for (int i = 0; i < 20; ++i) dist.publish(test::rand_applicable_delta(rng, dist.db(), next_index));

    std::vector<LogEntry> entries;
    for (std::uint64_t v = 1; v <= 20; ++v)
        entries.push_back(LogEntry{dist.log().delta_at(v), dist.log().signature_at(v)});
    Distributor restored = Distributor::restore(
        sr.pp, sr.secret_key, dist.db(), dist.current_signed(), dist.genesis_signature(),
        UpdateLog::restore(0, std::move(entries)));

    CHECK(restored.current_version() == 20);
    CHECK(restored.current_digest() == dist.current_digest());
    auto [a, sa] = restored.get_updates(5, 15);
    auto [b, sb] = dist.get_updates(5, 15);
    CHECK(a == b);
    CHECK(sa == sb);

    // A tampered row store fails the restore audit.
    Database bad = dist.db();
    bad.rows.begin()->second.push_back(0xff);
    CHECK_THROWS_AS(Distributor::restore(sr.pp, sr.secret_key, bad, dist.current_signed(),
                                         dist.genesis_signature(), UpdateLog()),
                    Error);
}

TEST_CASE("wire: request encoding is bit-exact and round-trips") {
    Bytes wire = encode_get_updates_request({1, 2});
    CHECK(wire.size() == 24);
    CHECK(to_hex(wire) == "484d485245513031"   // "HMHREQ01"
                          "0000000000000001"   // v
                          "0000000000000002"); // w
    GetUpdatesRequest req = decode_get_updates_request(wire);
    CHECK(req.from_version == 1);
    CHECK(req.to_version == 2);

    CHECK_THROWS_AS(decode_get_updates_request(Bytes(23, 0)), Error);
    Bytes trailing = wire;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_get_updates_request(trailing), Error);
}

TEST_CASE("wire: responses and errors round-trip through the dispatcher") {
    Distributor dist = make_dist();
    dist.publish(apple());
    dist.publish(DeltaBody::modify(1, to_bytes("apple"), to_bytes("pear")));

    auto [deltas, sd] = dist.get_updates(0, 2);
    GetUpdatesResponse rsp{deltas, sd};
    Bytes wire = encode_get_updates_response(rsp);
    CHECK(to_string(BytesView(wire).subspan(0, 8)) == "HMHRSP01");

    auto decoded = decode_response(wire, dist.pp().hash_params);
    auto* ok = std::get_if<GetUpdatesResponse>(&decoded);
    REQUIRE(ok != nullptr);
    CHECK(ok->deltas == deltas);
    CHECK(ok->signed_digest == sd);

    Bytes err_wire = encode_error_response({ErrorCode::InvalidRange, "w <= v"});
    auto decoded_err = decode_response(err_wire, dist.pp().hash_params);
    auto* err = std::get_if<ErrorResponse>(&decoded_err);
    REQUIRE(err != nullptr);
    CHECK(err->code == ErrorCode::InvalidRange);
    CHECK(err->message == "w <= v");

    CHECK_THROWS_AS(decode_response(to_bytes("HMHXXX99whatever"), dist.pp().hash_params), Error);
    Bytes truncated(wire.begin(), wire.begin() + 30);
    CHECK_THROWS_AS(decode_response(truncated, dist.pp().hash_params), Error);
}

TEST_CASE("handle_request serves honest requests and encodes protocol errors") {
    Distributor dist = make_dist();
    dist.publish(apple());

    Bytes rsp = handle_request(dist, encode_get_updates_request({0, 1}));
    auto decoded = decode_response(rsp, dist.pp().hash_params);
    CHECK(std::holds_alternative<GetUpdatesResponse>(decoded));

    Bytes err = handle_request(dist, encode_get_updates_request({1, 1}));
    auto decoded_err = decode_response(err, dist.pp().hash_params);
    auto* e = std::get_if<ErrorResponse>(&decoded_err);
    REQUIRE(e != nullptr);
    CHECK(e->code == ErrorCode::InvalidRange);

    Bytes garbage = to_bytes("not a message");
    auto decoded_parse = decode_response(handle_request(dist, garbage), dist.pp().hash_params);
    auto* pe = std::get_if<ErrorResponse>(&decoded_parse);
    REQUIRE(pe != nullptr);
    CHECK(pe->code == ErrorCode::Parse);
}
