#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmh/protocol.hpp"

namespace hmh::netsim {

/// What a fault does to a matched message.
///   flip_byte      XOR 0xff into the byte at `offset` (mod message length)
///   truncate       keep only the first `length` bytes
///   drop           message never delivered; the subscriber retries
///   reorder_with_next  hold the response back and deliver it, stale, in
///                  place of the subscriber's next response
///   replay         substitute the recorded response whose signed digest has
///                  version `from_version`
///   forge_signature  replace the response signature with seeded random bytes
enum class FaultActionType {
    FlipByte,
    Truncate,
    Drop,
    ReorderWithNext,
    Replay,
    ForgeSignature,
};

std::string_view fault_action_name(FaultActionType type);

struct FaultAction {
    FaultActionType type = FaultActionType::Drop;
    std::uint64_t offset = 0;        // flip_byte
    std::uint64_t length = 0;        // truncate
    std::uint64_t from_version = 0;  // replay
};

enum class MessageKind { Request, Response };

/// Selects the messages a fault fires on. Every unset field matches
/// anything; `occurrence` counts matches of the remaining selector (1-based)
/// so the rule fires exactly once, deterministically.
struct FaultMatch {
    std::optional<MessageKind> kind;
    std::optional<std::size_t> subscriber;
    std::size_t occurrence = 1;
};

struct FaultRule {
    FaultMatch match;
    FaultAction action;
};

/// Workload source: either explicit publish actions or a seeded generator.
struct WorkloadSpec {
    std::vector<DeltaBody> actions;  // used when non-empty
    std::uint64_t n_rows = 0;
    std::uint64_t n_updates = 0;
    double p_modify = 0.0;
    double p_insert = 1.0;
    double p_delete = 0.0;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::uint32_t security_level = 128;
    std::uint8_t scheme_id = kSchemeNullSig;
    std::size_t n_subscribers = 1;
    std::size_t retry_limit = 3;
    /// Every subscriber syncs after each `sync_every` publishes (0 = only the
    /// final sync).
    std::uint64_t sync_every = 0;
    WorkloadSpec workload;
    std::vector<FaultRule> faults;
};

enum class OutcomeStatus { Converged, TamperDetected, ProtocolError, NotConverged };

std::string_view outcome_status_name(OutcomeStatus status);

struct SubscriberOutcome {
    std::size_t subscriber = 0;
    OutcomeStatus status = OutcomeStatus::NotConverged;
    std::uint64_t version = 0;       // subscriber version at the end
    std::string error_class;         // set for TamperDetected/ProtocolError
    std::uint64_t at_version = 0;    // distributor version when it happened
    std::string digest_fingerprint;
    bool validated = false;
};

struct ScenarioReport {
    std::vector<SubscriberOutcome> outcomes;
    std::uint64_t final_version = 0;
    std::string distributor_fingerprint;
    /// Machine-readable line-delimited records of every deterministic event.
    std::string transcript;
    /// Hex SHAKE-256 of the transcript; equal configs give equal hashes.
    std::string transcript_hash;
    /// Wall-clock samples around each publish call (dominated by the two
    /// expands and the signature). Excluded from the transcript so timing
    /// never breaks determinism.
    std::vector<double> publish_us;

    bool all_converged() const;
};

/// Reproducible publish-action list valid against an initially empty
/// database: `n_rows` inserts followed by `n_updates` actions drawn from the
/// kind mix. Modifies and deletes only ever target live rows. Throws
/// Error(Config) for mixes that cannot make progress.
std::vector<DeltaBody> generate_workload(std::uint64_t seed, std::uint64_t n_rows,
                                         std::uint64_t n_updates, double p_modify,
                                         double p_insert, double p_delete);

/// Runs one scenario: executes the workload on a distributor, carries every
/// sync through the fault layer, and records outcomes. Deterministic under
/// (seed, config). Throws Error(Config) for configs that reference
/// nonexistent targets or cannot be generated.
ScenarioReport run_scenario(const ScenarioConfig& config);

/// Parses the JSON scenario file format (documented in the README).
ScenarioConfig scenario_config_from_json(const std::string& json_text);
std::string scenario_report_to_json_lines(const ScenarioReport& report);

}  // namespace hmh::netsim
