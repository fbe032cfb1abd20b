#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "hmh/hash_vector.hpp"
#include "hmh/xof.hpp"
#include "test_util.hpp"

using namespace hmh;

namespace {
const Params kDefault(16, 1024);
const Params kToy(4, 8);
}  // namespace

TEST_CASE("shake256 matches the published test vectors") {
    // Known-answer values for SHAKE-256 (cross-checked against an
    // independent implementation).
    CHECK(to_hex(shake256({}, 32)) ==
          "46b9dd2b0ba88d13233b3feb743eeb243fcd52ea62b81b82b50c27646ed5762f");
    Bytes abc = to_bytes("abc");
    CHECK(to_hex(shake256(abc, 32)) ==
          "483366601360a8771c6863080cc4114d8db44530f8f1e1ee4f94ea37e78b5739");
    Bytes long_out = shake256(abc, 64);
    CHECK(shake256(abc, 16) == Bytes(long_out.begin(), long_out.begin() + 16));  // prefix property
}

TEST_CASE("params reject impossible shapes") {
    CHECK_THROWS_AS(Params(0, 1024), Error);
    CHECK_THROWS_AS(Params(33, 1024), Error);
    CHECK_THROWS_AS(Params(16, 0), Error);
    CHECK_THROWS_AS(Params(16, 70000), Error);
    CHECK_THROWS_AS(Params(4, 7), Error);  // n*d not a byte multiple
    CHECK(Params(4, 8).digest_bytes() == 4);
    CHECK(Params(16, 1024).q() == 65536);
    CHECK(Params(32, 8).component_mask() == 0xffffffffu);
}

TEST_CASE("expand is deterministic and matches frozen vectors") {
    HashVector v = expand({}, kDefault);
    CHECK(v == expand({}, kDefault));
    // Frozen from an independent XOF + bit-slicing oracle.
    CHECK(v.component(0) == 45778);
    CHECK(v.component(1) == 44600);
    CHECK(v.component(2) == 45863);
    CHECK(v.component(3) == 43037);
    CHECK(v.component(4) == 59029);
    CHECK(v.component(5) == 30381);
    CHECK(v.component(6) == 55229);
    CHECK(v.component(7) == 20803);
    CHECK(digest_fingerprint(v) == "1b7ddc97efe60350");
}

TEST_CASE("expand of an encoded row matches the frozen vector") {
    Bytes encoded = to_bytes("orange");
    Bytes input;
    put_u64_be(input, 2);
    append(input, encoded);
    HashVector v = expand(input, kDefault);
    CHECK(v.component(0) == 45467);
    CHECK(v.component(1) == 20753);
    CHECK(v.component(2) == 57553);
    CHECK(v.component(3) == 19025);
    CHECK(digest_fingerprint(v) == "d134a1fc0e61ea64");
}

TEST_CASE("expand slices sub-byte components little-endian bit first") {
    Bytes zero{0x00};
    HashVector v = expand(zero, kToy);
    // First 4 XOF stream bytes split into nibbles, low nibble first.
    std::vector<std::uint32_t> want{7, 9, 1, 10, 12, 2, 5, 0};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(v.component(i) == want[i]);
    for (std::size_t i = 0; i < 8; ++i) CHECK(v.component(i) < 16);
}

TEST_CASE("vec_add: identity, commutativity, hand-checked wraparound") {
    std::mt19937_64 rng(1);
    HashVector zero = HashVector::zero(kDefault);
    for (int i = 0; i < 50; ++i) {
        HashVector a = test::rand_vector(rng, kDefault);
        HashVector b = test::rand_vector(rng, kDefault);
        CHECK(vec_add(a, zero) == a);
        CHECK(vec_add(a, b) == vec_add(b, a));
    }
    HashVector fifteen = HashVector::from_components(kToy, {15, 0, 0, 0, 0, 0, 0, 0});
    HashVector three = HashVector::from_components(kToy, {3, 0, 0, 0, 0, 0, 0, 0});
    CHECK(vec_add(fifteen, three).component(0) == 2);  // (15+3) mod 16
}

TEST_CASE("vec_add refuses mixed params") {
    CHECK_THROWS_AS(vec_add(HashVector::zero(kDefault), HashVector::zero(Params(16, 2048))), Error);
    try {
        vec_add(HashVector::zero(kDefault), HashVector::zero(kToy));
        FAIL("expected incompatible-parameters");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompatibleParams);
    }
}

TEST_CASE("vec_neg: identity on zero, frozen value, involution, inverse law") {
    std::mt19937_64 rng(2);
    CHECK(vec_neg(HashVector::zero(kDefault)) == HashVector::zero(kDefault));
    HashVector one = HashVector::from_components(kDefault, std::vector<std::uint32_t>(1024, 1));
    CHECK(vec_neg(one).component(0) == 65535);
    for (int i = 0; i < 50; ++i) {
        HashVector a = test::rand_vector(rng, kDefault);
        CHECK(vec_neg(vec_neg(a)) == a);
        CHECK(vec_add(a, vec_neg(a)) == HashVector::zero(kDefault));
    }
}

TEST_CASE("multiset_hash: empty, singleton, order independence") {
    std::mt19937_64 rng(3);
    CHECK(multiset_hash({}, kDefault) == HashVector::zero(kDefault));

    std::vector<Bytes> one{to_bytes("x")};
    CHECK(multiset_hash(one, kDefault) == expand(one[0], kDefault));

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Bytes> elements;
        for (int i = 0; i < 12; ++i) elements.push_back(test::rand_bytes(rng));
        Digest before = multiset_hash(elements, kDefault);
        std::shuffle(elements.begin(), elements.end(), rng);
        CHECK(multiset_hash(elements, kDefault) == before);
    }
}

TEST_CASE("multiset_hash counts duplicates") {
    std::vector<Bytes> once{to_bytes("dup")};
    std::vector<Bytes> twice{to_bytes("dup"), to_bytes("dup")};
    CHECK(multiset_hash(once, kDefault) != multiset_hash(twice, kDefault));
    CHECK(multiset_hash(twice, kDefault) ==
          vec_add(expand(once[0], kDefault), expand(once[0], kDefault)));
}

TEST_CASE("digest_insert agrees with multiset_hash") {
    std::mt19937_64 rng(4);
    Bytes x = to_bytes("x");
    CHECK(digest_insert(HashVector::zero(kDefault), x) == expand(x, kDefault));

    Bytes a = to_bytes("a"), b = to_bytes("b");
    std::vector<Bytes> ab{a, b};
    CHECK(digest_insert(digest_insert(HashVector::zero(kDefault), a), b) ==
          multiset_hash(ab, kDefault));

    // Inserting into the hash of a random S equals hashing S with the
    // element appended.
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Bytes> s;
        for (int i = 0; i < int(rng() % 16); ++i) s.push_back(test::rand_bytes(rng));
        Bytes extra = test::rand_bytes(rng);
        Digest incremental = digest_insert(multiset_hash(s, kDefault), extra);
        s.push_back(extra);
        CHECK(incremental == multiset_hash(s, kDefault));
    }
}

TEST_CASE("digest_remove inverts digest_insert") {
    std::mt19937_64 rng(5);
    Bytes x = to_bytes("x");
    Digest d = test::rand_vector(rng, kDefault);
    CHECK(digest_remove(digest_insert(d, x), x) == d);
    CHECK(digest_remove(HashVector::zero(kDefault), x) ==
          vec_neg(expand(x, kDefault)));

    // Removing every element of S in random order returns to zero.
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Bytes> s;
        for (int i = 0; i < int(1 + rng() % 64); ++i) s.push_back(test::rand_bytes(rng));
        Digest acc = multiset_hash(s, kDefault);
        std::shuffle(s.begin(), s.end(), rng);
        for (const Bytes& e : s) acc = digest_remove(acc, e);
        CHECK(acc == HashVector::zero(kDefault));
    }
}

TEST_CASE("digest_merge is the hash of the multiset union") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Bytes> s, t, both;
        for (int i = 0; i < int(rng() % 16); ++i) s.push_back(test::rand_bytes(rng));
        for (int i = 0; i < int(rng() % 16); ++i) t.push_back(test::rand_bytes(rng));
        both = s;
        both.insert(both.end(), t.begin(), t.end());
        Digest hs = multiset_hash(s, kDefault);
        Digest ht = multiset_hash(t, kDefault);
        CHECK(digest_merge(hs, ht) == multiset_hash(both, kDefault));
        CHECK(digest_merge(hs, HashVector::zero(kDefault)) == hs);
        CHECK(digest_merge(hs, vec_neg(hs)) == HashVector::zero(kDefault));
    }
}

TEST_CASE("digest serialization is bit-exact") {
    std::mt19937_64 rng(7);
    Bytes zero_bytes = digest_serialize(HashVector::zero(kDefault));
    CHECK(zero_bytes.size() == 2048);
    CHECK(std::all_of(zero_bytes.begin(), zero_bytes.end(), [](auto b) { return b == 0; }));

    // Hand-packed nibble layout: component j at bit offset 4j, low bit first.
    HashVector toy = HashVector::from_components(kToy, {1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(to_hex(digest_serialize(toy)) == "21436587");
    CHECK(digest_deserialize(digest_serialize(toy), kToy) == toy);

    for (int trial = 0; trial < 20; ++trial) {
        HashVector v = test::rand_vector(rng, kDefault);
        Bytes bytes = digest_serialize(v);
        CHECK(digest_deserialize(bytes, kDefault) == v);
        CHECK(digest_serialize(digest_deserialize(bytes, kDefault)) == bytes);
    }

    CHECK_THROWS_AS(digest_deserialize(Bytes(2047), kDefault), Error);
    try {
        digest_deserialize(Bytes(10), kDefault);
        FAIL("expected malformed-digest");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedDigest);
    }
}

TEST_CASE("hmh digest files round-trip") {
    std::mt19937_64 rng(8);
    auto path = std::filesystem::temp_directory_path() / "hmh_test_digest.hmh";
    HashVector v = test::rand_vector(rng, kDefault);
    write_digest_file(path, v);
    CHECK(read_digest_file(path) == v);
    CHECK(std::filesystem::file_size(path) == 8 + 1 + 4 + 1 + 2048);
    std::filesystem::remove(path);
}

TEST_CASE("different params never share expand outputs") {
    Bytes input = to_bytes("same input");
    Bytes a = digest_serialize(expand(input, Params(16, 1024)));
    Bytes b = digest_serialize(expand(input, Params(16, 2048)));
    CHECK(!std::equal(a.begin(), a.end(), b.begin()));  // domain tag differs
}

TEST_CASE("avalanche: one flipped input bit moves most components") {
    std::mt19937_64 rng(9);
    const std::size_t n = kDefault.n();
    int trials = 1000;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
        Bytes input = test::rand_bytes(rng, 32);
        HashVector before = expand(input, kDefault);
        Bytes flipped = input;
        std::size_t bit = rng() % (flipped.size() * 8);
        flipped[bit / 8] ^= std::uint8_t(1u << (bit % 8));
        HashVector after = expand(flipped, kDefault);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (before.component(i) != after.component(i)) ++changed;
        if (changed >= n / 4) ++ok;
    }
    CHECK(ok == trials);
}
