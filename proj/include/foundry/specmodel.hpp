#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "foundry/ruledsl.hpp"
#include "foundry/util.hpp"

namespace foundry::spec {

// Input/schema value kinds. `text` is the free-prose input kind that flows
// through the input gate; at expression level it behaves as string.
enum class ValueKind { boolean, integer, real, string, text };

const char* value_kind_name(ValueKind k);
dsl::Kind to_dsl_kind(ValueKind k);

struct InputDecl {
    std::string name;
    ValueKind kind = ValueKind::text;

    bool operator==(const InputDecl&) const = default;
};

struct SchemaField {
    ValueKind kind = ValueKind::string;
    bool nullable = false;

    bool operator==(const SchemaField&) const = default;
};

struct SchemaDecl {
    // Ordered: serialization round-trips preserve author order.
    std::vector<std::pair<std::string, SchemaField>> entries;

    const SchemaField* find(const std::string& name) const;
    bool operator==(const SchemaDecl&) const = default;
};

// Validation expression plus an optional human-readable reason used for
// escalation reason codes. A plain YAML string populates both with the
// expression text.
struct ValidationDecl {
    std::string expr;
    std::string reason;

    bool operator==(const ValidationDecl&) const = default;
};

enum class StepType { bounded_invocation, deterministic_rule };

struct StepSpec {
    std::string name;
    StepType type = StepType::deterministic_rule;
    std::optional<SchemaDecl> schema;          // bounded_invocation only
    std::vector<ValidationDecl> validations;   // bounded_invocation only
    std::optional<std::string> logic;          // deterministic_rule only
    std::optional<std::string> prompt_hint;    // bounded_invocation only
    std::vector<std::string> reasons;          // deterministic_rule: branch reasons, then ELSE

    bool operator==(const StepSpec&) const = default;
};

struct WorkflowSpec {
    std::string name;
    std::string version = "v1.0";
    std::vector<std::string> compliance_tags;
    std::optional<std::string> template_override;
    std::vector<InputDecl> inputs;
    std::vector<StepSpec> steps;

    bool operator==(const WorkflowSpec&) const = default;
};

struct SpecDiagnostic {
    std::string path;
    std::string message;
};

// Strict parse of the YAML workflow document. Unknown keys are rejected —
// a silently dropped key is a latent spec bug that would otherwise surface
// at runtime. Throws Error with codes MalformedDocument, UnknownField,
// MissingRequiredField; messages name the offending path.
WorkflowSpec parse_spec(const std::string& source_text);

// Cross-field invariants. Diagnostics are the return value; an empty list
// means the spec is compilable.
std::vector<SpecDiagnostic> validate_spec(const WorkflowSpec& spec);

// Canonical YAML. serialize(parse_spec(d)) re-parses structurally equal.
std::string serialize(const WorkflowSpec& spec);

bool valid_identifier(const std::string& s);

}  // namespace foundry::spec
