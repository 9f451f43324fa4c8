#include "foundry/specmodel.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace foundry::spec {

const char* value_kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::boolean: return "boolean";
        case ValueKind::integer: return "integer";
        case ValueKind::real: return "real";
        case ValueKind::string: return "string";
        case ValueKind::text: return "text";
    }
    return "?";
}

dsl::Kind to_dsl_kind(ValueKind k) {
    switch (k) {
        case ValueKind::boolean: return dsl::Kind::boolean;
        case ValueKind::integer: return dsl::Kind::integer;
        case ValueKind::real: return dsl::Kind::real;
        default: return dsl::Kind::string;
    }
}

const SchemaField* SchemaDecl::find(const std::string& name) const {
    for (const auto& [n, f] : entries) {
        if (n == name) return &f;
    }
    return nullptr;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& msg) {
    throw Error("MalformedDocument", path + ": " + msg);
}

[[noreturn]] void missing(const std::string& path) {
    throw Error("MissingRequiredField", path);
}

void require_keys(const YAML::Node& map, const std::string& path,
                  const std::set<std::string>& known) {
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (!known.count(key)) {
            throw Error("UnknownField", path.empty() ? key : path + "." + key);
        }
    }
}

std::string scalar(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) malformed(path, "expected a scalar value");
    return n.as<std::string>();
}

std::optional<ValueKind> parse_kind(const std::string& name, bool allow_text) {
    if (name == "boolean" || name == "bool") return ValueKind::boolean;
    if (name == "integer" || name == "int") return ValueKind::integer;
    if (name == "real" || name == "float") return ValueKind::real;
    if (name == "string") return ValueKind::string;
    if (allow_text && name == "text") return ValueKind::text;
    return std::nullopt;
}

SchemaDecl parse_schema(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) malformed(path, "schema must be a map of field -> kind");
    SchemaDecl schema;
    for (const auto& kv : node) {
        const std::string field = kv.first.as<std::string>();
        std::string kind_text = scalar(kv.second, path + "." + field);
        SchemaField f;
        if (!kind_text.empty() && kind_text.back() == '?') {
            f.nullable = true;
            kind_text.pop_back();
        }
        auto kind = parse_kind(kind_text, /*allow_text=*/false);
        if (!kind) malformed(path + "." + field, "unknown schema kind '" + kind_text + "'");
        f.kind = *kind;
        schema.entries.emplace_back(field, f);
    }
    return schema;
}

std::vector<ValidationDecl> parse_validations(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence()) malformed(path, "validation must be a list");
    std::vector<ValidationDecl> out;
    std::size_t i = 0;
    for (const auto& item : node) {
        const std::string ipath = path + "[" + std::to_string(i++) + "]";
        ValidationDecl v;
        if (item.IsScalar()) {
            v.expr = item.as<std::string>();
            v.reason = v.expr;
        } else if (item.IsMap()) {
            require_keys(item, ipath, {"expr", "reason"});
            if (!item["expr"]) missing(ipath + ".expr");
            v.expr = scalar(item["expr"], ipath + ".expr");
            v.reason = item["reason"] ? scalar(item["reason"], ipath + ".reason") : v.expr;
        } else {
            malformed(ipath, "expected expression string or {expr, reason}");
        }
        out.push_back(std::move(v));
    }
    return out;
}

StepSpec parse_step(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) malformed(path, "expected a step map");
    require_keys(node, path, {"step", "type", "schema", "validation", "logic", "prompt_hint", "reasons"});

    StepSpec step;
    if (!node["step"]) missing(path + ".step");
    step.name = scalar(node["step"], path + ".step");

    if (!node["type"]) missing(path + ".type");
    const std::string type = scalar(node["type"], path + ".type");
    if (type == "bounded_invocation") {
        step.type = StepType::bounded_invocation;
    } else if (type == "deterministic_rule") {
        step.type = StepType::deterministic_rule;
    } else {
        // Only the two declared step types exist; anything else is a spec
        // error, not a feature to silently ignore.
        malformed(path + ".type", "unknown step type '" + type + "'");
    }

    if (node["schema"]) step.schema = parse_schema(node["schema"], path + ".schema");
    if (node["validation"]) step.validations = parse_validations(node["validation"], path + ".validation");
    if (node["logic"]) step.logic = scalar(node["logic"], path + ".logic");
    if (node["prompt_hint"]) step.prompt_hint = scalar(node["prompt_hint"], path + ".prompt_hint");
    if (node["reasons"]) {
        if (!node["reasons"].IsSequence()) malformed(path + ".reasons", "expected a list of strings");
        std::size_t i = 0;
        for (const auto& r : node["reasons"]) {
            step.reasons.push_back(scalar(r, path + ".reasons[" + std::to_string(i++) + "]"));
        }
    }
    return step;
}

}  // namespace

WorkflowSpec parse_spec(const std::string& source_text) {
    YAML::Node root;
    try {
        root = YAML::Load(source_text);
    } catch (const YAML::Exception& e) {
        throw Error("MalformedDocument", std::string("YAML parse failure: ") + e.what());
    }
    if (root.IsNull() || !root.IsDefined()) {
        missing("metadata.name");
    }
    if (!root.IsMap()) malformed("", "top level must be a map");
    require_keys(root, "", {"metadata", "inputs", "logic_requirements"});

    WorkflowSpec spec;

    const YAML::Node meta = root["metadata"];
    if (!meta || !meta.IsMap() || !meta["name"]) missing("metadata.name");
    require_keys(meta, "metadata", {"name", "version", "compliance", "template_override"});
    spec.name = scalar(meta["name"], "metadata.name");
    if (meta["version"]) spec.version = scalar(meta["version"], "metadata.version");
    if (meta["compliance"]) {
        if (!meta["compliance"].IsSequence()) malformed("metadata.compliance", "expected a list");
        std::size_t i = 0;
        for (const auto& tag : meta["compliance"]) {
            spec.compliance_tags.push_back(
                scalar(tag, "metadata.compliance[" + std::to_string(i++) + "]"));
        }
    }
    if (meta["template_override"]) {
        spec.template_override = scalar(meta["template_override"], "metadata.template_override");
    }

    if (root["inputs"]) {
        if (!root["inputs"].IsSequence()) malformed("inputs", "expected a list");
        std::size_t i = 0;
        for (const auto& item : root["inputs"]) {
            const std::string path = "inputs[" + std::to_string(i++) + "]";
            if (!item.IsMap()) malformed(path, "expected {name, type}");
            require_keys(item, path, {"name", "type"});
            if (!item["name"]) missing(path + ".name");
            if (!item["type"]) missing(path + ".type");
            InputDecl decl;
            decl.name = scalar(item["name"], path + ".name");
            const std::string t = scalar(item["type"], path + ".type");
            auto kind = parse_kind(t, /*allow_text=*/true);
            if (!kind) malformed(path + ".type", "unknown input type '" + t + "'");
            decl.kind = *kind;
            spec.inputs.push_back(std::move(decl));
        }
    }

    if (root["logic_requirements"]) {
        if (!root["logic_requirements"].IsSequence()) malformed("logic_requirements", "expected a list");
        std::size_t i = 0;
        for (const auto& item : root["logic_requirements"]) {
            spec.steps.push_back(parse_step(item, "logic_requirements[" + std::to_string(i++) + "]"));
        }
    }
    return spec;
}

std::vector<SpecDiagnostic> validate_spec(const WorkflowSpec& spec) {
    std::vector<SpecDiagnostic> diags;
    auto flag = [&diags](std::string path, std::string message) {
        diags.push_back({std::move(path), std::move(message)});
    };

    if (!valid_identifier(spec.name) ) {
        // Workflow names in the wild carry spaces; only emptiness is fatal.
        if (spec.name.empty()) flag("metadata.name", "workflow name is empty");
    }
    if (spec.steps.empty()) flag("logic_requirements", "workflow declares no steps");

    std::set<std::string> input_names;
    for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
        const auto& in = spec.inputs[i];
        const std::string path = "inputs[" + std::to_string(i) + "]";
        if (!valid_identifier(in.name)) flag(path, "invalid input name '" + in.name + "'");
        if (!input_names.insert(in.name).second) flag(path, "duplicate input name '" + in.name + "'");
    }

    std::set<std::string> step_names;
    for (std::size_t i = 0; i < spec.steps.size(); ++i) {
        const auto& st = spec.steps[i];
        const std::string path = "logic_requirements[" + std::to_string(i) + "]";
        if (!valid_identifier(st.name)) flag(path, "invalid step name '" + st.name + "'");
        if (!step_names.insert(st.name).second) flag(path, "duplicate step name '" + st.name + "'");

        if (st.type == StepType::bounded_invocation) {
            if (!st.schema) {
                flag(path, "bounded_invocation step '" + st.name + "' requires a schema");
            } else {
                if (st.schema->entries.empty()) flag(path + ".schema", "schema is empty");
                std::set<std::string> fields;
                for (const auto& [name, f] : st.schema->entries) {
                    (void)f;
                    if (!valid_identifier(name)) flag(path + ".schema", "invalid field name '" + name + "'");
                    if (!fields.insert(name).second) flag(path + ".schema", "duplicate field '" + name + "'");
                }
            }
            if (st.logic) flag(path, "bounded_invocation step '" + st.name + "' must not carry logic");
            if (!st.reasons.empty()) flag(path, "reasons apply only to deterministic_rule steps");

            // Validation expressions may reference the step's own schema and
            // the workflow inputs. The grammar itself lives in ruledsl.
            dsl::TypeEnv env;
            for (const auto& in : spec.inputs) env[in.name] = to_dsl_kind(in.kind);
            if (st.schema) {
                for (const auto& [name, f] : st.schema->entries) env[name] = to_dsl_kind(f.kind);
            }
            for (std::size_t v = 0; v < st.validations.size(); ++v) {
                const std::string vpath = path + ".validation[" + std::to_string(v) + "]";
                try {
                    auto expr = dsl::parse_expr(st.validations[v].expr);
                    for (const auto& d : dsl::typecheck(expr, env)) {
                        flag(vpath, d.message);
                    }
                } catch (const Error& e) {
                    flag(vpath, e.what());
                }
            }
        } else {
            if (!st.logic || st.logic->empty()) {
                flag(path, "deterministic_rule step '" + st.name + "' requires logic");
            }
            if (st.schema) flag(path, "deterministic_rule step '" + st.name + "' must not carry a schema");
            if (!st.validations.empty()) flag(path, "validations apply only to bounded_invocation steps");
            if (st.prompt_hint) flag(path, "prompt_hint applies only to bounded_invocation steps");
        }
    }

    for (std::size_t i = 0; i < spec.compliance_tags.size(); ++i) {
        if (!valid_identifier(spec.compliance_tags[i])) {
            flag("metadata.compliance[" + std::to_string(i) + "]",
                 "invalid compliance tag '" + spec.compliance_tags[i] + "'");
        }
    }
    return diags;
}

std::string serialize(const WorkflowSpec& spec) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << spec.name;
    out << YAML::Key << "version" << YAML::Value << spec.version;
    if (!spec.compliance_tags.empty()) {
        out << YAML::Key << "compliance" << YAML::Value << YAML::Flow << spec.compliance_tags;
    }
    if (spec.template_override) {
        out << YAML::Key << "template_override" << YAML::Value << *spec.template_override;
    }
    out << YAML::EndMap;

    out << YAML::Key << "inputs" << YAML::Value << YAML::BeginSeq;
    for (const auto& in : spec.inputs) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << in.name;
        out << YAML::Key << "type" << YAML::Value << value_kind_name(in.kind);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "logic_requirements" << YAML::Value << YAML::BeginSeq;
    for (const auto& st : spec.steps) {
        out << YAML::BeginMap;
        out << YAML::Key << "step" << YAML::Value << st.name;
        out << YAML::Key << "type" << YAML::Value
            << (st.type == StepType::bounded_invocation ? "bounded_invocation" : "deterministic_rule");
        if (st.schema) {
            out << YAML::Key << "schema" << YAML::Value << YAML::BeginMap;
            for (const auto& [name, f] : st.schema->entries) {
                std::string kind = value_kind_name(f.kind);
                if (f.nullable) kind += "?";
                out << YAML::Key << name << YAML::Value << kind;
            }
            out << YAML::EndMap;
        }
        if (!st.validations.empty()) {
            out << YAML::Key << "validation" << YAML::Value << YAML::BeginSeq;
            for (const auto& v : st.validations) {
                if (v.reason == v.expr) {
                    out << v.expr;
                } else {
                    out << YAML::BeginMap;
                    out << YAML::Key << "expr" << YAML::Value << v.expr;
                    out << YAML::Key << "reason" << YAML::Value << v.reason;
                    out << YAML::EndMap;
                }
            }
            out << YAML::EndSeq;
        }
        if (st.logic) {
            out << YAML::Key << "logic" << YAML::Value << YAML::Literal << *st.logic;
        }
        if (st.prompt_hint) {
            out << YAML::Key << "prompt_hint" << YAML::Value << *st.prompt_hint;
        }
        if (!st.reasons.empty()) {
            out << YAML::Key << "reasons" << YAML::Value << YAML::BeginSeq;
            for (const auto& r : st.reasons) out << r;
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;

    std::string text = out.c_str();
    text += "\n";
    return text;
}

}  // namespace foundry::spec
