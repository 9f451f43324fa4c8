#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "foundry/util.hpp"

namespace foundry::gates {

enum class Severity { low, medium, high, critical };
enum class GateKind { input, code, output };
enum class GateAction { block, redact, flag };

const char* severity_name(Severity s);
const char* gate_name(GateKind g);
const char* action_name(GateAction a);

// One auditable textual detector. Every rule ships with a positive and a
// negative self-test fixture; the rule-set meta-test refuses rules whose
// fixtures do not behave.
struct SecurityRule {
    std::string id;
    GateKind gate = GateKind::code;
    std::string cwe_tag;      // "CWE-89", "SECRETS", "" for injection/PII
    Severity severity = Severity::medium;
    std::string matcher;      // "regex" | "encoded_blob"
    std::string pattern;      // primary regex, or decimal run length for encoded_blob
    std::string pattern2;     // optional: both patterns must match (composite rules)
    std::string label_filter; // optional: code-gate rule applies only to matching labels
    std::string category;     // PII category for redaction rules
    GateAction action = GateAction::flag;
    std::string description;
    std::string positive_fixture;
    std::string negative_fixture;
};

struct GateFinding {
    GateKind gate = GateKind::input;
    std::string rule_id;
    std::string matched;      // matched span text
    std::size_t begin = 0;
    std::size_t end = 0;
    GateAction action = GateAction::flag;
    Severity severity = Severity::medium;
    std::string category;
    std::string label;        // code gate: which artifact text matched
};

struct GatePolicy {
    GateAction injection_action = GateAction::block;
    GateAction pii_action = GateAction::redact;
    Severity code_block_threshold = Severity::high;
    // PII categories to scan; empty set means all shipped categories.
    std::set<std::string> pii_categories;
};

class RuleSet {
public:
    // The shipped rule corpus, compiled in. The on-disk corpus file is the
    // same rules in the versioned exchange format.
    static RuleSet builtin();
    static RuleSet load(const std::string& path);

    void save(const std::string& path) const;

    const std::vector<SecurityRule>& rules() const { return rules_; }
    std::vector<const SecurityRule*> rules_for(GateKind gate) const;
    int version() const { return version_; }

    void add(SecurityRule rule) { rules_.push_back(std::move(rule)); }

private:
    int version_ = 1;
    std::vector<SecurityRule> rules_;
};

struct InputScanResult {
    std::string sanitized;
    std::vector<GateFinding> findings;
    // placeholder -> original text; retained in-process only, never serialized.
    std::map<std::string, std::string> redaction_map;

    bool blocked() const;
};

// Input gate: injection detection plus PII redaction. PII spans are replaced
// by typed placeholders "[PII:<category>#k]" numbered per category so that
// distinct entities stay distinguishable downstream.
InputScanResult input_gate_scan(const std::string& text, const GatePolicy& policy,
                                const RuleSet& rules);

// Code gate: static rules over (label, text) pairs — module parameters and
// generated logic. Scanning is pure; blocking decisions belong to the caller.
std::vector<GateFinding> code_gate_scan(const std::vector<std::pair<std::string, std::string>>& texts,
                                        const RuleSet& rules);

// Per-instance leak marker: fixed prefix + 128 random bits, hex. The prefix
// keeps accidental collisions with real data implausible while staying
// scannable by plain substring search.
inline constexpr const char* kCanaryPrefix = "CANARY-";

struct CanaryToken {
    std::string value;
    std::string instance_id;
    std::uint64_t minted_seq = 0;
};

// Throws Error("RandomnessUnavailable") when the CSPRNG fails.
CanaryToken mint_canary(const std::string& instance_id, std::uint64_t seq = 0);

struct OutputScanResult {
    bool leaked = false;
    std::optional<GateFinding> leak;
    std::string sanitized;              // PII-redacted outbound text
    std::vector<GateFinding> findings;  // PII findings on outbound text
};

// Output gate: canary substring detection (always blocks; not configurable)
// plus a PII re-scan of outbound text.
OutputScanResult output_gate_scan(const std::string& text, const CanaryToken& canary,
                                  const GatePolicy& policy, const RuleSet& rules);

}  // namespace foundry::gates
