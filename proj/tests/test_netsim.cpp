#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "hmh/netsim.hpp"

using namespace hmh;
using namespace hmh::netsim;

namespace {

ScenarioConfig base_config() {
    ScenarioConfig config;
    config.seed = 7;
    config.security_level = 128;
    config.scheme_id = kSchemeNullSig;
    config.n_subscribers = 3;
    config.retry_limit = 3;
    config.sync_every = 10;
    config.workload.n_rows = 20;
    config.workload.n_updates = 80;
    config.workload.p_modify = 0.5;
    config.workload.p_insert = 0.3;
    config.workload.p_delete = 0.2;
    return config;
}

FaultRule one_shot(FaultActionType type, std::optional<std::size_t> subscriber,
                   std::size_t occurrence = 1) {
    FaultRule rule;
    rule.match.kind = MessageKind::Response;
    rule.match.subscriber = subscriber;
    rule.match.occurrence = occurrence;
    rule.action.type = type;
    return rule;
}

}  // namespace

TEST_CASE("generate_workload: insert-only from empty produces distinct indices") {
    auto actions = generate_workload(1, 0, 10, 0.0, 1.0, 0.0);
    CHECK(actions.size() == 10);
    std::set<std::uint64_t> indices;
    for (const auto& a : actions) {
        CHECK(a.kind == DeltaKind::Insert);
        indices.insert(a.index);
    }
    CHECK(indices.size() == 10);
}

TEST_CASE("generate_workload is reproducible and validates against a live database") {
    auto a = generate_workload(99, 30, 200, 0.4, 0.3, 0.3);
    auto b = generate_workload(99, 30, 200, 0.4, 0.3, 0.3);
    CHECK(a == b);

    // Replaying against an empty database must never hit a precondition.
    Database db(Params(16, 1024));
    for (const auto& body : a) db = apply_to_db(std::move(db), body);
}

TEST_CASE("generate_workload: empirical kind frequencies track the mix within 2%") {
    auto actions = generate_workload(5, 200, 10000, 0.5, 0.3, 0.2);
    std::map<DeltaKind, double> freq;
    for (std::size_t i = 200; i < actions.size(); ++i) freq[actions[i].kind] += 1.0;
    for (auto& [kind, count] : freq) count /= 10000.0;
    CHECK(freq[DeltaKind::Modify] == doctest::Approx(0.5).epsilon(0.04));
    CHECK(freq[DeltaKind::Insert] == doctest::Approx(0.3).epsilon(0.066));
    CHECK(freq[DeltaKind::Delete] == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("generate_workload rejects infeasible mixes") {
    CHECK_THROWS_AS(generate_workload(1, 0, 10, 0.5, 0.0, 0.5), Error);
    CHECK_THROWS_AS(generate_workload(1, 10, 10, 0.5, 0.5, 0.5), Error);  // sums to 1.5
    CHECK_THROWS_AS(generate_workload(1, 10, 10, -0.1, 1.1, 0.0), Error);
}

TEST_CASE("fault-free scenario: every subscriber converges on the distributor digest") {
    ScenarioConfig config = base_config();
    ScenarioReport report = run_scenario(config);

    CHECK(report.outcomes.size() == 3);
    CHECK(report.all_converged());
    for (const auto& o : report.outcomes) {
        CHECK(o.status == OutcomeStatus::Converged);
        CHECK(o.validated);
        CHECK(o.version == report.final_version);
        CHECK(o.digest_fingerprint == report.distributor_fingerprint);
    }
    CHECK(report.final_version == 100);
}

TEST_CASE("determinism: identical configs give identical transcripts") {
    ScenarioConfig config = base_config();
    config.faults.push_back(one_shot(FaultActionType::FlipByte, 1, 2));
    ScenarioReport a = run_scenario(config);
    ScenarioReport b = run_scenario(config);
    CHECK(a.transcript == b.transcript);
    CHECK(a.transcript_hash == b.transcript_hash);

    config.seed ^= 1;
    CHECK(run_scenario(config).transcript_hash != a.transcript_hash);
}

TEST_CASE("flip fault: the victim reports tamper, everyone else converges") {
    ScenarioConfig config = base_config();
    FaultRule rule = one_shot(FaultActionType::FlipByte, 1);
    rule.action.offset = 45;  // inside the first delta's payload bytes
    config.faults.push_back(rule);

    ScenarioReport report = run_scenario(config);
    std::size_t tampered = 0;
    for (const auto& o : report.outcomes) {
        if (o.subscriber == 1) {
            CHECK(o.status != OutcomeStatus::Converged);
            if (o.status == OutcomeStatus::TamperDetected) ++tampered;
            else CHECK(!o.error_class.empty());
        } else {
            CHECK(o.status == OutcomeStatus::Converged);
        }
    }
    CHECK(tampered == 1);
}

TEST_CASE("forged signature: rejected as tamper at the victim") {
    ScenarioConfig config = base_config();
    config.faults.push_back(one_shot(FaultActionType::ForgeSignature, 2));
    ScenarioReport report = run_scenario(config);
    CHECK(report.outcomes[2].status == OutcomeStatus::TamperDetected);
    CHECK(report.outcomes[0].status == OutcomeStatus::Converged);
    CHECK(report.outcomes[1].status == OutcomeStatus::Converged);
}

TEST_CASE("truncation: explicit error, never silent corruption") {
    ScenarioConfig config = base_config();
    FaultRule rule = one_shot(FaultActionType::Truncate, 0);
    rule.action.length = 30;
    config.faults.push_back(rule);
    ScenarioReport report = run_scenario(config);
    CHECK(report.outcomes[0].status != OutcomeStatus::Converged);
    CHECK((report.outcomes[0].status == OutcomeStatus::TamperDetected ||
           !report.outcomes[0].error_class.empty()));
}

TEST_CASE("drops are retried to convergence; a drop storm exhausts retries") {
    ScenarioConfig config = base_config();
    config.faults.push_back(one_shot(FaultActionType::Drop, 0));
    ScenarioReport ok = run_scenario(config);
    CHECK(ok.all_converged());

    // More consecutive drops than the retry budget against the final sync.
    ScenarioConfig storm = base_config();
    storm.sync_every = 0;  // only the final sync happens
    storm.retry_limit = 2;
    for (std::size_t occ = 1; occ <= 6; ++occ) {
        FaultRule rule;
        rule.match.subscriber = 1;
        rule.match.occurrence = occ;  // both requests and responses
        rule.action.type = FaultActionType::Drop;
        storm.faults.push_back(rule);
    }
    ScenarioReport bad = run_scenario(storm);
    CHECK(bad.outcomes[1].status == OutcomeStatus::NotConverged);
    CHECK(bad.outcomes[0].status == OutcomeStatus::Converged);
}

TEST_CASE("reorder: stale delivery surfaces as retry or out-of-order, then converges") {
    ScenarioConfig config = base_config();
    config.faults.push_back(one_shot(FaultActionType::ReorderWithNext, 1, 1));
    ScenarioReport report = run_scenario(config);
    CHECK(report.all_converged());
    // The held/stale delivery is visible in the transcript.
    CHECK(report.transcript.find("held-for-reorder") != std::string::npos);
    CHECK(report.transcript.find("delivered-stale") != std::string::npos);
}

TEST_CASE("replay: an old response is rejected by version sequencing") {
    ScenarioConfig config = base_config();
    config.sync_every = 10;
    FaultRule rule = one_shot(FaultActionType::Replay, 2, 3);
    rule.action.from_version = 10;  // response recorded for the first sync round
    config.faults.push_back(rule);
    ScenarioReport report = run_scenario(config);
    // The stale batch triggers out-of-order, the retry then converges.
    CHECK(report.transcript.find("out-of-order") != std::string::npos);
    CHECK(report.all_converged());
}

TEST_CASE("replay of a never-recorded version degrades to a noted no-op") {
    ScenarioConfig config = base_config();
    FaultRule rule = one_shot(FaultActionType::Replay, 0, 1);
    rule.action.from_version = 9999;  // no response for this version exists
    config.faults.push_back(rule);
    ScenarioReport report = run_scenario(config);
    CHECK(report.transcript.find("replay-unavailable") != std::string::npos);
    CHECK(report.all_converged());
}

TEST_CASE("config validation fires before execution") {
    ScenarioConfig config = base_config();
    config.faults.push_back(one_shot(FaultActionType::Drop, 7));  // no subscriber 7
    CHECK_THROWS_AS(run_scenario(config), Error);

    ScenarioConfig zero = base_config();
    zero.n_subscribers = 0;
    CHECK_THROWS_AS(run_scenario(zero), Error);

    ScenarioConfig req_forge = base_config();
    FaultRule bad;
    bad.match.kind = MessageKind::Request;
    bad.action.type = FaultActionType::ForgeSignature;
    req_forge.faults.push_back(bad);
    CHECK_THROWS_AS(run_scenario(req_forge), Error);
}

TEST_CASE("scenario config parses from JSON") {
    std::string text = R"json({
        "seed": 11,
        "security_level": 128,
        "scheme": "nullsig",
        "n_subscribers": 2,
        "retry_limit": 4,
        "sync_every": 5,
        "workload": {"n_rows": 5, "n_updates": 20, "mix": [0.6, 0.2, 0.2]},
        "faults": [
            {"match": {"kind": "response", "subscriber": 1, "occurrence": 2},
             "action": {"type": "flip_byte", "offset": 12}},
            {"match": {"kind": "response"}, "action": {"type": "replay", "from_version": 5}}
        ]
    })json";
    ScenarioConfig config = scenario_config_from_json(text);
    CHECK(config.seed == 11);
    CHECK(config.scheme_id == kSchemeNullSig);
    CHECK(config.n_subscribers == 2);
    CHECK(config.retry_limit == 4);
    CHECK(config.sync_every == 5);
    CHECK(config.workload.n_rows == 5);
    CHECK(config.workload.p_modify == doctest::Approx(0.6));
    REQUIRE(config.faults.size() == 2);
    CHECK(config.faults[0].action.type == FaultActionType::FlipByte);
    CHECK(config.faults[0].action.offset == 12);
    CHECK(config.faults[0].match.subscriber == std::size_t(1));
    CHECK(config.faults[1].action.type == FaultActionType::Replay);
    CHECK(config.faults[1].action.from_version == 5);

    CHECK_THROWS_AS(scenario_config_from_json("{not json"), Error);
    CHECK_THROWS_AS(scenario_config_from_json(R"({"workload":{"mix":[1.0]}})"), Error);
    CHECK_THROWS_AS(
        scenario_config_from_json(R"({"faults":[{"action":{"type":"warp"}}]})"), Error);
}

TEST_CASE("explicit action workloads drive the scenario") {
    ScenarioConfig config;
    config.seed = 3;
    config.scheme_id = kSchemeNullSig;
    config.n_subscribers = 1;
    config.workload.actions = {
        DeltaBody::insert(1, to_bytes("apple")),
        DeltaBody::insert(2, to_bytes("orange")),
        DeltaBody::insert(3, to_bytes("banana")),
        DeltaBody::modify(2, to_bytes("orange"), to_bytes("peach")),
    };
    ScenarioReport report = run_scenario(config);
    CHECK(report.all_converged());
    CHECK(report.final_version == 4);
    CHECK(report.distributor_fingerprint == "c5b65edcd283d4f3");  // frozen H(D*)
}
