#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

#include "foundry/ruledsl.hpp"
#include "foundry/specmodel.hpp"

namespace foundry::artifact {

// Reusable capability wired into an artifact. Parameters are plain text and
// must pass the code gate before assembly ships them.
struct ModuleBinding {
    std::string id;
    std::string capability;  // db_access | http_client | notifier
    std::map<std::string, std::string> parameters;

    bool operator==(const ModuleBinding&) const = default;
};

struct BoundedStep {
    std::string name;
    spec::SchemaDecl schema;
    std::vector<spec::ValidationDecl> validations;
    std::string prompt_hint;
};

struct RuleStep {
    std::string name;
    // Canonical chain text when `parsed`; the raw generated text otherwise,
    // kept so the syntax stage can report what the generator actually said.
    std::string chain_text;
    bool parsed = false;
    std::string parse_error;
    std::vector<std::string> branch_reasons;
    std::string default_reason;
};

struct CompiledStep {
    spec::StepType type = spec::StepType::deterministic_rule;
    BoundedStep bounded;
    RuleStep rule;
};

struct Provenance {
    std::string spec_digest;
    std::string prompt_digest;
    std::string generator_id;
    int regeneration_count = 0;
};

// The versioned deterministic IR a compile produces. Serialization is
// canonical (stable key order, no timestamps, no randomness) so identical
// compiles are byte-identical.
struct CompiledArtifact {
    int format_version = 1;
    std::string name;
    std::string logic_version;
    std::string template_id;
    std::vector<ModuleBinding> modules;
    std::vector<spec::InputDecl> inputs;
    std::vector<CompiledStep> steps;
    std::vector<std::string> verdict_codes;
    bool canary_enabled = true;
    int max_attempts = 3;
    Provenance provenance;
    std::string validation_digest;  // stable digest of the admitting report
    std::string artifact_digest;    // content digest; excluded from itself

    nlohmann::json to_json() const;
    static CompiledArtifact from_json(const nlohmann::json& j);

    std::string serialize() const;
    static CompiledArtifact deserialize(const std::string& text);

    // Digest over the canonical form with artifact_digest blanked.
    std::string content_digest() const;
    // Set validation + content digests once the pipeline has admitted this
    // artifact.
    void finalize(const std::string& validation_digest_value);
    // True when artifact_digest matches the stored content.
    bool digest_intact() const;

    dsl::VerdictSet verdict_set() const;

    // Parse a rule step's chain and attach the per-branch reasons. Requires
    // rule.parsed; throws Error("ArtifactInvalid") otherwise.
    dsl::RuleChain compiled_chain(const RuleStep& rule) const;

    // (label, text) pairs the code gate scans: module parameters and
    // generated logic.
    std::vector<std::pair<std::string, std::string>> scannable_texts() const;
};

}  // namespace foundry::artifact
