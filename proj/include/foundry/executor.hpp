#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "foundry/artifact.hpp"
#include "foundry/client.hpp"
#include "foundry/secgates.hpp"

namespace foundry::runtime {

// Terminal outcome of a workflow instance.
struct StepOutcome {
    std::string status;       // verdict code
    std::string reason_code;
    bool escalated = false;   // true iff status == HUMAN_REVIEW
};

// Append-only decision record.
//
// INVARIANTS:
//   1. APPEND-ONLY: events are never modified or deleted.
//   2. SEQUENTIAL: per instance, sequence numbers are contiguous from 1.
//   3. DETERMINISTIC PAYLOADS: payloads never embed wall-clock time, canary
//      values or other per-run randomness; wall_clock_ms is an informational
//      envelope field excluded from determinism digests.
//   4. DECISION PROVENANCE: decision payloads carry logic_version and the
//      input digest, so every verdict traces to the logic that produced it.
struct AuditEvent {
    std::string instance_id;
    std::uint64_t seq = 0;
    std::string kind;  // gate_finding | invocation_attempt | validation_result | decision | escalation
    nlohmann::json payload;
    std::int64_t wall_clock_ms = 0;

    nlohmann::json to_json(bool include_wall_clock = true) const;
    static AuditEvent from_json(const nlohmann::json& j);
};

inline constexpr const char* kEventGateFinding = "gate_finding";
inline constexpr const char* kEventInvocationAttempt = "invocation_attempt";
inline constexpr const char* kEventValidationResult = "validation_result";
inline constexpr const char* kEventDecision = "decision";
inline constexpr const char* kEventEscalation = "escalation";

// Sink for audit events. Implementations enforce the sequence contract:
// an event whose seq is not exactly last_seq+1 for its instance raises
// Error("SequenceGap") — a gap means instance logic is broken and the
// instance must abort rather than write a hole into the trail.
class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void append(const AuditEvent& event) = 0;
};

class MemoryAuditLog : public AuditSink {
public:
    void append(const AuditEvent& event) override;
    const std::vector<AuditEvent>& events() const { return events_; }

private:
    std::vector<AuditEvent> events_;
    std::map<std::string, std::uint64_t> last_seq_;
};

// NDJSON file log. Thread-safe for concurrent appenders; per-instance
// ordering is enforced under the lock.
class FileAuditLog : public AuditSink {
public:
    explicit FileAuditLog(std::string path);

    void append(const AuditEvent& event) override;

    static std::vector<AuditEvent> read_all(const std::string& path);

private:
    std::string path_;
    std::mutex mutex_;
    std::map<std::string, std::uint64_t> last_seq_;
};

struct RunPolicy {
    std::string instance_id = "instance-1";
    int max_attempts = 0;  // 0: use the artifact's retry default
    gates::GatePolicy gate_policy;
    const gates::RuleSet* rules = nullptr;  // nullptr: shipped builtin rules
    AuditSink* sink = nullptr;              // optional persistent sink
};

struct RunResult {
    StepOutcome outcome;
    std::vector<AuditEvent> events;
    std::string output_digest;  // determinism digest over outcome + event payloads
    int quarantined_calls = 0;
    int drift_violations = 0;
};

// Outcome of one bounded invocation step.
struct BoundedOutcome {
    bool escalated = false;
    std::string escalation_reason;
    std::map<std::string, dsl::Value> values;
    int attempts_used = 0;
    int violations = 0;
};

using EventEmitter = std::function<void(const std::string& kind, nlohmann::json payload)>;

// One bounded agentic invocation under the safety contract: quarantined
// prompt (sanitized input + schema + output contract + canary), strict
// schema check, declared validations, retry with violation feedback, and
// escalation on budget exhaustion. Transport failures consume the same
// retry budget as validation failures.
BoundedOutcome run_bounded_step(const artifact::BoundedStep& step,
                                const std::map<std::string, dsl::Value>& bindings,
                                const std::string& sanitized_text,
                                client::GeneratorClient& quarantined, int max_attempts,
                                const gates::CanaryToken& canary, const gates::GatePolicy& policy,
                                const gates::RuleSet& rules, const EventEmitter& emit = {});

// Deterministic decision phase: first-match chain evaluation with
// escalate-on-null semantics.
dsl::Verdict evaluate_decision_step(const dsl::RuleChain& chain,
                                    const std::map<std::string, dsl::Value>& bindings);

// Execute a compiled artifact. `quarantined` may be null for artifacts with
// no bounded steps — deterministic-only workflows make zero client calls.
// Throws Error codes: InputTypeMismatch, ArtifactDigestMismatch,
// ClientRequired, RoleViolation, UnboundField.
RunResult run_workflow(const artifact::CompiledArtifact& art,
                       const std::map<std::string, dsl::Value>& inputs,
                       client::GeneratorClient* quarantined, const RunPolicy& policy = {});

// Re-execute the deterministic phases from a recorded trail, bypassing the
// client, and check the outcome against the logged decision. Throws
// Error("ReplayDivergence") on version mismatch, tampering or outcome drift.
StepOutcome replay(const artifact::CompiledArtifact& art, const std::vector<AuditEvent>& events);

// True when the log respects the safety-sandwich phase order: per step,
// invocation attempts precede validation results, and everything precedes
// the decision event.
bool safety_sandwich_ordered(const std::vector<AuditEvent>& events);

// Typed input bindings from a JSON document, checked against declarations.
std::map<std::string, dsl::Value> parse_input_bindings(const nlohmann::json& doc,
                                                       const std::vector<spec::InputDecl>& decls);

dsl::Value value_from_json(const nlohmann::json& j);
nlohmann::json value_to_json(const dsl::Value& v);

}  // namespace foundry::runtime
