#include "hmh/netsim.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "hmh/xof.hpp"

namespace hmh::netsim {

using nlohmann::json;

std::string_view fault_action_name(FaultActionType type) {
    switch (type) {
        case FaultActionType::FlipByte: return "flip_byte";
        case FaultActionType::Truncate: return "truncate";
        case FaultActionType::Drop: return "drop";
        case FaultActionType::ReorderWithNext: return "reorder_with_next";
        case FaultActionType::Replay: return "replay";
        case FaultActionType::ForgeSignature: return "forge_signature";
    }
    return "?";
}

std::string_view outcome_status_name(OutcomeStatus status) {
    switch (status) {
        case OutcomeStatus::Converged: return "converged";
        case OutcomeStatus::TamperDetected: return "tamper-detected";
        case OutcomeStatus::ProtocolError: return "protocol-error";
        case OutcomeStatus::NotConverged: return "not-converged";
    }
    return "?";
}

bool ScenarioReport::all_converged() const {
    for (const auto& o : outcomes)
        if (o.status != OutcomeStatus::Converged) return false;
    return true;
}

namespace {

// Deterministic helpers on top of mt19937_64; std::uniform_* distributions
// are implementation-defined, so transcripts would not be portable.
double unit_double(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1p-53;
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t bound) {
    return bound == 0 ? 0 : rng() % bound;
}

Bytes random_payload(std::mt19937_64& rng) {
    Bytes out(1 + below(rng, 24));
    for (auto& b : out) b = std::uint8_t(rng());
    return out;
}

}  // namespace

std::vector<DeltaBody> generate_workload(std::uint64_t seed, std::uint64_t n_rows,
                                         std::uint64_t n_updates, double p_modify,
                                         double p_insert, double p_delete) {
    if (p_modify < 0 || p_insert < 0 || p_delete < 0 ||
        std::abs(p_modify + p_insert + p_delete - 1.0) > 1e-9)
        raise(ErrorCode::Config, "kind probabilities must be non-negative and sum to 1");
    if (n_rows == 0 && n_updates > 0 && p_insert == 0.0)
        raise(ErrorCode::Config, "workload cannot make progress: empty database and no inserts");

    std::mt19937_64 rng(seed);
    std::vector<DeltaBody> actions;
    actions.reserve(n_rows + n_updates);

    std::map<std::uint64_t, Bytes> live;
    std::vector<std::uint64_t> live_order;  // for O(1) uniform picks
    std::uint64_t next_index = 1;

    auto do_insert = [&] {
        std::uint64_t index = next_index++;
        Bytes payload = random_payload(rng);
        live.emplace(index, payload);
        live_order.push_back(index);
        actions.push_back(DeltaBody::insert(index, std::move(payload)));
    };

    for (std::uint64_t i = 0; i < n_rows; ++i) do_insert();

    for (std::uint64_t i = 0; i < n_updates; ++i) {
        if (live.empty()) {
            if (p_insert == 0.0)
                raise(ErrorCode::Config, "workload cannot make progress: database emptied");
            do_insert();
            continue;
        }
        double u = unit_double(rng);
        if (u < p_modify) {
            std::size_t pick = std::size_t(below(rng, live_order.size()));
            std::uint64_t index = live_order[pick];
            Bytes old_payload = live[index];
            Bytes new_payload = random_payload(rng);
            live[index] = new_payload;
            actions.push_back(DeltaBody::modify(index, std::move(old_payload), std::move(new_payload)));
        } else if (u < p_modify + p_insert) {
            do_insert();
        } else {
            std::size_t pick = std::size_t(below(rng, live_order.size()));
            std::uint64_t index = live_order[pick];
            Bytes old_payload = live[index];
            live.erase(index);
            live_order[pick] = live_order.back();
            live_order.pop_back();
            actions.push_back(DeltaBody::remove(index, std::move(old_payload)));
        }
    }
    return actions;
}

namespace {

struct RuleState {
    FaultRule rule;
    std::size_t matches_seen = 0;
    bool fired = false;
};

/// In-process message layer between the distributor and one set of
/// subscribers; applies fault rules deterministically.
class FaultEngine {
  public:
    FaultEngine(std::vector<FaultRule> rules, std::mt19937_64& rng, const Params& params,
                std::string& transcript)
        : rng_(rng), params_(params), transcript_(transcript) {
        for (auto& r : rules) rules_.push_back(RuleState{std::move(r), 0, false});
        stash_.clear();
    }

    void set_subscriber_count(std::size_t n) { stash_.assign(n, std::nullopt); }

    /// Records an honest response so replay rules can resurrect it later.
    void record_honest_response(std::uint64_t version, const Bytes& bytes) {
        recorded_.emplace(version, bytes);
    }

    /// Passes one message through the fault layer. nullopt = never delivered.
    std::optional<Bytes> deliver(Bytes msg, MessageKind kind, std::size_t subscriber) {
        const std::size_t index = next_index_++;

        // A held (reordered) response overtakes any fresh one to the same
        // subscriber; the fresh response is the overtaken packet and is lost.
        if (kind == MessageKind::Response && stash_[subscriber]) {
            Bytes held = std::move(*stash_[subscriber]);
            stash_[subscriber].reset();
            log_msg(index, kind, subscriber, held.size(), "delivered-stale");
            return held;
        }

        std::string fault_applied;
        for (auto& rs : rules_) {
            if (!matches(rs.rule.match, kind, subscriber)) continue;
            ++rs.matches_seen;
            if (rs.fired || rs.matches_seen != rs.rule.match.occurrence) continue;
            rs.fired = true;
            fault_applied = std::string(fault_action_name(rs.rule.action.type));
            switch (rs.rule.action.type) {
                case FaultActionType::FlipByte:
                    if (!msg.empty()) msg[rs.rule.action.offset % msg.size()] ^= 0xff;
                    break;
                case FaultActionType::Truncate:
                    if (rs.rule.action.length < msg.size()) msg.resize(rs.rule.action.length);
                    break;
                case FaultActionType::Drop:
                    log_msg(index, kind, subscriber, msg.size(), "drop");
                    return std::nullopt;
                case FaultActionType::ReorderWithNext:
                    stash_[subscriber] = std::move(msg);
                    log_msg(index, kind, subscriber, stash_[subscriber]->size(), "held-for-reorder");
                    return std::nullopt;
                case FaultActionType::Replay: {
                    auto it = recorded_.find(rs.rule.action.from_version);
                    if (it == recorded_.end()) {
                        fault_applied = "replay-unavailable";
                    } else {
                        msg = it->second;
                    }
                    break;
                }
                case FaultActionType::ForgeSignature:
                    forge_signature(msg);
                    break;
            }
        }
        log_msg(index, kind, subscriber, msg.size(), fault_applied);
        return msg;
    }

  private:
    bool matches(const FaultMatch& m, MessageKind kind, std::size_t subscriber) const {
        if (m.kind && *m.kind != kind) return false;
        if (m.subscriber && *m.subscriber != subscriber) return false;
        return true;
    }

    void forge_signature(Bytes& msg) {
        try {
            auto rsp = decode_get_updates_response(msg, params_);
            for (auto& b : rsp.signed_digest.signature) b = std::uint8_t(rng_());
            msg = encode_get_updates_response(rsp);
        } catch (const Error&) {
            if (!msg.empty()) msg.back() ^= 0xff;  // already unparseable; corrupt the tail
        }
    }

    void log_msg(std::size_t index, MessageKind kind, std::size_t subscriber, std::size_t size,
                 const std::string& fault) {
        json j{{"ev", "msg"},
               {"idx", index},
               {"dir", kind == MessageKind::Request ? "req" : "rsp"},
               {"sub", subscriber},
               {"bytes", size}};
        if (!fault.empty()) j["fault"] = fault;
        transcript_ += j.dump();
        transcript_ += '\n';
    }

    std::vector<RuleState> rules_;
    std::mt19937_64& rng_;
    Params params_;
    std::string& transcript_;
    std::vector<std::optional<Bytes>> stash_;
    std::map<std::uint64_t, Bytes> recorded_;
    std::size_t next_index_ = 0;
};

struct SubscriberSlot {
    explicit SubscriberSlot(Subscriber sub) : sub(std::move(sub)) {}
    Subscriber sub;
    bool halted = false;
    OutcomeStatus halt_status = OutcomeStatus::ProtocolError;
    std::string error_class;
    std::uint64_t halted_at_version = 0;
};

void validate_config(const ScenarioConfig& config) {
    if (config.n_subscribers == 0) raise(ErrorCode::Config, "need at least one subscriber");
    for (const auto& rule : config.faults) {
        if (rule.match.subscriber && *rule.match.subscriber >= config.n_subscribers)
            raise(ErrorCode::Config, "fault rule targets nonexistent subscriber " +
                                         std::to_string(*rule.match.subscriber));
        if (rule.match.occurrence == 0) raise(ErrorCode::Config, "occurrence is 1-based");
        switch (rule.action.type) {
            case FaultActionType::ReorderWithNext:
            case FaultActionType::Replay:
            case FaultActionType::ForgeSignature:
                if (!rule.match.kind || *rule.match.kind != MessageKind::Response)
                    raise(ErrorCode::Config,
                          std::string(fault_action_name(rule.action.type)) +
                              " must match kind=response");
                break;
            default:
                break;
        }
    }
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config) {
    validate_config(config);

    std::vector<DeltaBody> actions = config.workload.actions;
    if (actions.empty() && (config.workload.n_rows > 0 || config.workload.n_updates > 0)) {
        actions = generate_workload(config.seed, config.workload.n_rows, config.workload.n_updates,
                                    config.workload.p_modify, config.workload.p_insert,
                                    config.workload.p_delete);
    }

    ScenarioReport report;
    std::string& transcript = report.transcript;
    auto emit = [&transcript](json j) {
        transcript += j.dump();
        transcript += '\n';
    };

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    Bytes entropy_input = to_bytes("HMH-SIM-ENTROPY");
    put_u64_be(entropy_input, config.seed);
    Bytes entropy = shake256(entropy_input, 32);

    SetupResult sr = setup(config.security_level, entropy, config.scheme_id);
    Distributor dist(sr.pp, sr.secret_key);

    emit({{"ev", "scenario_start"},
          {"seed", config.seed},
          {"level", config.security_level},
          {"scheme", scheme_from_id(config.scheme_id).name()},
          {"subscribers", config.n_subscribers},
          {"actions", actions.size()}});

    FaultEngine net(config.faults, rng, sr.pp.hash_params, transcript);
    net.set_subscriber_count(config.n_subscribers);

    std::vector<SubscriberSlot> subs;
    subs.reserve(config.n_subscribers);
    for (std::size_t i = 0; i < config.n_subscribers; ++i)
        subs.emplace_back(Subscriber(sr.pp, dist.current_signed()));

    // One sync operation with bounded retries. Returns when the subscriber
    // reaches `target`, halts, or runs out of attempts.
    auto sync_subscriber = [&](std::size_t i) {
        SubscriberSlot& slot = subs[i];
        if (slot.halted) return;
        std::uint64_t target = dist.current_version();
        if (slot.sub.version() == target) return;

        std::size_t attempts = 0;
        while (attempts <= config.retry_limit && slot.sub.version() < target) {
            ++attempts;
            Bytes req = encode_get_updates_request({slot.sub.version(), target});
            auto delivered_req = net.deliver(std::move(req), MessageKind::Request, i);
            if (!delivered_req) continue;  // dropped; retry

            Bytes rsp = handle_request(dist, *delivered_req);
            net.record_honest_response(target, rsp);
            auto delivered_rsp = net.deliver(std::move(rsp), MessageKind::Response, i);
            if (!delivered_rsp) continue;  // dropped or held; retry

            try {
                auto decoded = decode_response(*delivered_rsp, sr.pp.hash_params);
                if (auto* err = std::get_if<ErrorResponse>(&decoded)) {
                    if (err->code == ErrorCode::LogTruncated) {
                        // Out-of-band full state transfer, then verify it.
                        auto [db, signed_digest] = dist.snapshot();
                        slot.sub.full_resync(std::move(db), signed_digest);
                        emit({{"ev", "full_resync"}, {"sub", i}, {"version", slot.sub.version()}});
                        continue;
                    }
                    slot.halted = true;
                    slot.halt_status = OutcomeStatus::ProtocolError;
                    slot.error_class = std::string(error_code_name(err->code));
                    slot.halted_at_version = target;
                    emit({{"ev", "protocol_error"},
                          {"sub", i},
                          {"class", slot.error_class},
                          {"at_version", target}});
                    return;
                }
                auto& ok_rsp = std::get<GetUpdatesResponse>(decoded);
                slot.sub.apply_updates(ok_rsp.deltas, ok_rsp.signed_digest);
                emit({{"ev", "apply"}, {"sub", i}, {"version", slot.sub.version()}});
            } catch (const Error& e) {
                if (e.code() == ErrorCode::OutOfOrder) {
                    emit({{"ev", "apply_error"},
                          {"sub", i},
                          {"class", "out-of-order"},
                          {"at_version", target}});
                    continue;  // stale or reordered batch; retry cleanly
                }
                slot.halted = true;
                slot.halt_status = e.code() == ErrorCode::TamperDetected
                                       ? OutcomeStatus::TamperDetected
                                       : OutcomeStatus::ProtocolError;
                slot.error_class = std::string(error_code_name(e.code()));
                slot.halted_at_version = target;
                emit({{"ev", "apply_error"},
                      {"sub", i},
                      {"class", slot.error_class},
                      {"at_version", target}});
                return;
            }
        }
        if (slot.sub.version() < target)
            emit({{"ev", "retries_exhausted"}, {"sub", i}, {"at_version", target}});
    };

    std::uint64_t published = 0;
    for (const DeltaBody& body : actions) {
        auto t0 = std::chrono::steady_clock::now();
        SignedDigest sd = dist.publish(body);
        auto t1 = std::chrono::steady_clock::now();
        report.publish_us.push_back(
            std::chrono::duration<double, std::micro>(t1 - t0).count());
        ++published;
        emit({{"ev", "publish"},
              {"version", sd.version},
              {"kind", delta_kind_name(body.kind)},
              {"fp", digest_fingerprint(sd.digest)}});
        if (config.sync_every > 0 && published % config.sync_every == 0)
            for (std::size_t i = 0; i < subs.size(); ++i) sync_subscriber(i);
    }
    for (std::size_t i = 0; i < subs.size(); ++i) sync_subscriber(i);

    report.final_version = dist.current_version();
    report.distributor_fingerprint = digest_fingerprint(dist.current_digest());

    for (std::size_t i = 0; i < subs.size(); ++i) {
        SubscriberSlot& slot = subs[i];
        SubscriberOutcome outcome;
        outcome.subscriber = i;
        outcome.version = slot.sub.version();
        outcome.digest_fingerprint = digest_fingerprint(slot.sub.digest());
        if (slot.halted) {
            outcome.status = slot.halt_status;
            outcome.error_class = slot.error_class;
            outcome.at_version = slot.halted_at_version;
        } else {
            ValidationResult vr = slot.sub.validate();
            outcome.validated = vr.ok;
            bool at_head = slot.sub.version() == dist.current_version();
            outcome.status = (at_head && vr.ok) ? OutcomeStatus::Converged
                                                : OutcomeStatus::NotConverged;
            // The one forbidden outcome: claiming convergence with a digest
            // that differs from the distributor's.
            if (outcome.status == OutcomeStatus::Converged &&
                !(slot.sub.digest() == dist.current_digest()))
                throw std::logic_error("silent divergence: converged subscriber digest mismatch");
        }
        emit({{"ev", "outcome"},
              {"sub", i},
              {"status", std::string(outcome_status_name(outcome.status))},
              {"version", outcome.version},
              {"class", outcome.error_class},
              {"fp", outcome.digest_fingerprint},
              {"validated", outcome.validated}});
        report.outcomes.push_back(std::move(outcome));
    }

    emit({{"ev", "scenario_end"},
          {"version", report.final_version},
          {"dist_fp", report.distributor_fingerprint}});

    report.transcript_hash = to_hex(shake256(to_bytes(report.transcript), 16));
    return report;
}

ScenarioConfig scenario_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, std::string("scenario config: ") + e.what());
    }
    try {
        ScenarioConfig config;
        config.seed = j.value("seed", 0ull);
        config.security_level = j.value("security_level", 128u);
        config.scheme_id = scheme_from_name(j.value("scheme", "nullsig")).id();
        config.n_subscribers = j.value("n_subscribers", std::size_t(1));
        config.retry_limit = j.value("retry_limit", std::size_t(3));
        config.sync_every = j.value("sync_every", 0ull);

        if (j.contains("workload")) {
            const json& w = j.at("workload");
            if (w.contains("actions")) {
                for (const json& a : w.at("actions")) {
                    DeltaKind kind = delta_kind_from_name(a.at("kind").get<std::string>());
                    std::uint64_t index = a.at("index").get<std::uint64_t>();
                    auto hex_field = [&a](const char* key) {
                        return from_hex(a.value(key, std::string()));
                    };
                    switch (kind) {
                        case DeltaKind::Modify:
                            config.workload.actions.push_back(DeltaBody::modify(
                                index, hex_field("old_hex"), hex_field("new_hex")));
                            break;
                        case DeltaKind::Insert:
                            config.workload.actions.push_back(
                                DeltaBody::insert(index, hex_field("new_hex")));
                            break;
                        case DeltaKind::Delete:
                            config.workload.actions.push_back(
                                DeltaBody::remove(index, hex_field("old_hex")));
                            break;
                    }
                }
            } else {
                config.workload.n_rows = w.value("n_rows", 0ull);
                config.workload.n_updates = w.value("n_updates", 0ull);
                if (w.contains("mix")) {
                    auto mix = w.at("mix").get<std::vector<double>>();
                    if (mix.size() != 3)
                        raise(ErrorCode::Config, "mix must be [p_modify, p_insert, p_delete]");
                    config.workload.p_modify = mix[0];
                    config.workload.p_insert = mix[1];
                    config.workload.p_delete = mix[2];
                }
            }
        }

        if (j.contains("faults")) {
            for (const json& f : j.at("faults")) {
                FaultRule rule;
                if (f.contains("match")) {
                    const json& m = f.at("match");
                    if (m.contains("kind")) {
                        std::string kind = m.at("kind").get<std::string>();
                        if (kind == "request") rule.match.kind = MessageKind::Request;
                        else if (kind == "response") rule.match.kind = MessageKind::Response;
                        else raise(ErrorCode::Config, "match.kind must be request or response");
                    }
                    if (m.contains("subscriber"))
                        rule.match.subscriber = m.at("subscriber").get<std::size_t>();
                    rule.match.occurrence = m.value("occurrence", std::size_t(1));
                }
                const json& a = f.at("action");
                std::string type = a.at("type").get<std::string>();
                if (type == "flip_byte") {
                    rule.action.type = FaultActionType::FlipByte;
                    rule.action.offset = a.value("offset", 0ull);
                } else if (type == "truncate") {
                    rule.action.type = FaultActionType::Truncate;
                    rule.action.length = a.value("length", 0ull);
                } else if (type == "drop") {
                    rule.action.type = FaultActionType::Drop;
                } else if (type == "reorder_with_next") {
                    rule.action.type = FaultActionType::ReorderWithNext;
                } else if (type == "replay") {
                    rule.action.type = FaultActionType::Replay;
                    rule.action.from_version = a.value("from_version", 0ull);
                } else if (type == "forge_signature") {
                    rule.action.type = FaultActionType::ForgeSignature;
                } else {
                    raise(ErrorCode::Config, "unknown fault action '" + type + "'");
                }
                config.faults.push_back(std::move(rule));
            }
        }
        return config;
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, std::string("scenario config: ") + e.what());
    }
}

std::string scenario_report_to_json_lines(const ScenarioReport& report) {
    std::string out = report.transcript;
    json summary{{"ev", "summary"},
                 {"transcript_hash", report.transcript_hash},
                 {"final_version", report.final_version},
                 {"dist_fp", report.distributor_fingerprint},
                 {"publish_samples", report.publish_us.size()}};
    out += summary.dump();
    out += '\n';
    return out;
}

}  // namespace hmh::netsim
