#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "foundry/artifact.hpp"
#include "foundry/executor.hpp"
#include "foundry/secgates.hpp"

namespace foundry::validate {

// Pipeline stages in their mandatory order: Security < Syntax < Execution
// < Accuracy. One attempt short-circuits at the first FAIL; regeneration
// happens above this module.
enum class Stage { security, syntax, execution, accuracy };

const char* stage_name(Stage s);

struct Finding {
    std::string id;
    gates::Severity severity = gates::Severity::high;
    std::string message;
    std::string span;  // offending source fragment or location
};

struct StageReport {
    Stage stage = Stage::security;
    bool pass = true;  // FAIL implies findings non-empty
    std::vector<Finding> findings;
    double duration_ms = 0.0;
    double accuracy = -1.0;  // accuracy stage only
};

struct ValidationReport {
    std::vector<StageReport> stages;  // pipeline order; nothing after a FAIL
    bool overall = false;
    std::string artifact_digest;

    nlohmann::json to_json() const;
    // Digest over outcome-bearing fields only (durations excluded), so the
    // digest recorded in artifacts is reproducible.
    std::string stable_digest() const;
};

// Input/expected-verdict case for the execution and accuracy stages.
struct GoldenCase {
    std::map<std::string, dsl::Value> inputs;
    // Step name -> extraction value map standing in for bounded invocations.
    std::map<std::string, std::map<std::string, dsl::Value>> mocked_extractions;
    std::string expected_verdict;
    std::optional<std::string> expected_reason;
    // Injected consecutive transport failures before the mock responds.
    int client_failures = 0;
};

// Line-delimited golden records, one JSON case per line.
std::vector<GoldenCase> load_golden(const std::string& path);
std::vector<GoldenCase> parse_golden(const std::string& text);

struct FirstPassRecord {
    bool security = true;
    bool syntax = true;
    bool execution = true;
    bool accuracy = true;

    bool overall_first_pass() const { return security && syntax && execution && accuracy; }
    bool& stage_flag(Stage s);
};

struct FirstPassRates {
    double security = 0.0;
    double syntax = 0.0;
    double execution = 0.0;
    double accuracy = 0.0;
    double overall = 0.0;
    std::size_t records = 0;
};

// Throws Error("EmptyBatch") on an empty record set.
FirstPassRates first_pass_rates(const std::vector<FirstPassRecord>& records);

struct PipelineConfig {
    std::vector<GoldenCase> execution_fixtures;
    std::vector<GoldenCase> golden;
    double accuracy_threshold = 0.95;
    // Ablation support for fault seeding and defense-in-depth tests; the
    // shipped default enables everything.
    std::set<Stage> enabled = {Stage::security, Stage::syntax, Stage::execution, Stage::accuracy};
    const gates::RuleSet* rules = nullptr;
    gates::GatePolicy gate_policy;
};

StageReport run_security(const artifact::CompiledArtifact& art, const PipelineConfig& config);
StageReport run_syntax(const artifact::CompiledArtifact& art);
StageReport run_execution(const artifact::CompiledArtifact& art, const PipelineConfig& config);
StageReport run_accuracy(const artifact::CompiledArtifact& art, const PipelineConfig& config);

ValidationReport run_pipeline(const artifact::CompiledArtifact& art, const PipelineConfig& config);

// Execute one golden case against the artifact with a deterministic mock
// quarantined client. Exposed for the accuracy stage and tests.
runtime::RunResult run_golden_case(const artifact::CompiledArtifact& art, const GoldenCase& gc,
                                   const PipelineConfig& config, const std::string& instance_id);

}  // namespace foundry::validate
