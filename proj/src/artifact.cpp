#include "foundry/artifact.hpp"

#include "foundry/util.hpp"

using nlohmann::json;

namespace foundry::artifact {

namespace {

json schema_to_json(const spec::SchemaDecl& schema) {
    // Array of [name, kind, nullable] triples: canonical and order-preserving.
    json out = json::array();
    for (const auto& [name, f] : schema.entries) {
        out.push_back({name, spec::value_kind_name(f.kind), f.nullable});
    }
    return out;
}

spec::SchemaDecl schema_from_json(const json& j) {
    spec::SchemaDecl schema;
    for (const auto& e : j) {
        spec::SchemaField f;
        const std::string kind = e.at(1).get<std::string>();
        if (kind == "boolean") f.kind = spec::ValueKind::boolean;
        else if (kind == "integer") f.kind = spec::ValueKind::integer;
        else if (kind == "real") f.kind = spec::ValueKind::real;
        else if (kind == "string") f.kind = spec::ValueKind::string;
        else throw Error("MalformedDocument", "unknown schema kind '" + kind + "'");
        f.nullable = e.at(2).get<bool>();
        schema.entries.emplace_back(e.at(0).get<std::string>(), f);
    }
    return schema;
}

}  // namespace

json CompiledArtifact::to_json() const {
    json j;
    j["format_version"] = format_version;
    j["name"] = name;
    j["logic_version"] = logic_version;
    j["template_id"] = template_id;

    json mods = json::array();
    for (const auto& m : modules) {
        mods.push_back({{"id", m.id}, {"capability", m.capability}, {"parameters", m.parameters}});
    }
    j["modules"] = std::move(mods);

    json ins = json::array();
    for (const auto& in : inputs) {
        ins.push_back({{"name", in.name}, {"type", spec::value_kind_name(in.kind)}});
    }
    j["inputs"] = std::move(ins);

    json steps_json = json::array();
    for (const auto& s : steps) {
        json js;
        if (s.type == spec::StepType::bounded_invocation) {
            js["type"] = "bounded_invocation";
            js["name"] = s.bounded.name;
            js["schema"] = schema_to_json(s.bounded.schema);
            json vals = json::array();
            for (const auto& v : s.bounded.validations) {
                vals.push_back({{"expr", v.expr}, {"reason", v.reason}});
            }
            js["validations"] = std::move(vals);
            js["prompt_hint"] = s.bounded.prompt_hint;
        } else {
            js["type"] = "deterministic_rule";
            js["name"] = s.rule.name;
            js["chain"] = s.rule.chain_text;
            js["parsed"] = s.rule.parsed;
            js["parse_error"] = s.rule.parse_error;
            js["branch_reasons"] = s.rule.branch_reasons;
            js["default_reason"] = s.rule.default_reason;
        }
        steps_json.push_back(std::move(js));
    }
    j["steps"] = std::move(steps_json);

    j["verdict_codes"] = verdict_codes;
    j["canary_policy"] = {{"enabled", canary_enabled}};
    j["max_attempts"] = max_attempts;
    j["provenance"] = {{"spec_digest", provenance.spec_digest},
                       {"prompt_digest", provenance.prompt_digest},
                       {"generator_id", provenance.generator_id},
                       {"regeneration_count", provenance.regeneration_count}};
    j["validation_digest"] = validation_digest;
    j["artifact_digest"] = artifact_digest;
    return j;
}

CompiledArtifact CompiledArtifact::from_json(const json& j) {
    CompiledArtifact a;
    a.format_version = j.at("format_version").get<int>();
    if (a.format_version != 1) {
        throw Error("UnsupportedFormat",
                    "artifact format_version " + std::to_string(a.format_version));
    }
    a.name = j.at("name").get<std::string>();
    a.logic_version = j.at("logic_version").get<std::string>();
    a.template_id = j.at("template_id").get<std::string>();

    for (const auto& m : j.at("modules")) {
        ModuleBinding mb;
        mb.id = m.at("id").get<std::string>();
        mb.capability = m.at("capability").get<std::string>();
        mb.parameters = m.at("parameters").get<std::map<std::string, std::string>>();
        a.modules.push_back(std::move(mb));
    }
    for (const auto& in : j.at("inputs")) {
        spec::InputDecl d;
        d.name = in.at("name").get<std::string>();
        const std::string t = in.at("type").get<std::string>();
        if (t == "boolean") d.kind = spec::ValueKind::boolean;
        else if (t == "integer") d.kind = spec::ValueKind::integer;
        else if (t == "real") d.kind = spec::ValueKind::real;
        else if (t == "string") d.kind = spec::ValueKind::string;
        else if (t == "text") d.kind = spec::ValueKind::text;
        else throw Error("MalformedDocument", "unknown input type '" + t + "'");
        a.inputs.push_back(std::move(d));
    }
    for (const auto& s : j.at("steps")) {
        CompiledStep step;
        if (s.at("type").get<std::string>() == "bounded_invocation") {
            step.type = spec::StepType::bounded_invocation;
            step.bounded.name = s.at("name").get<std::string>();
            step.bounded.schema = schema_from_json(s.at("schema"));
            for (const auto& v : s.at("validations")) {
                step.bounded.validations.push_back(
                    {v.at("expr").get<std::string>(), v.at("reason").get<std::string>()});
            }
            step.bounded.prompt_hint = s.value("prompt_hint", "");
        } else {
            step.type = spec::StepType::deterministic_rule;
            step.rule.name = s.at("name").get<std::string>();
            step.rule.chain_text = s.at("chain").get<std::string>();
            step.rule.parsed = s.at("parsed").get<bool>();
            step.rule.parse_error = s.value("parse_error", "");
            step.rule.branch_reasons = s.at("branch_reasons").get<std::vector<std::string>>();
            step.rule.default_reason = s.at("default_reason").get<std::string>();
        }
        a.steps.push_back(std::move(step));
    }
    a.verdict_codes = j.at("verdict_codes").get<std::vector<std::string>>();
    a.canary_enabled = j.at("canary_policy").at("enabled").get<bool>();
    a.max_attempts = j.at("max_attempts").get<int>();
    a.provenance.spec_digest = j.at("provenance").at("spec_digest").get<std::string>();
    a.provenance.prompt_digest = j.at("provenance").at("prompt_digest").get<std::string>();
    a.provenance.generator_id = j.at("provenance").at("generator_id").get<std::string>();
    a.provenance.regeneration_count = j.at("provenance").at("regeneration_count").get<int>();
    a.validation_digest = j.at("validation_digest").get<std::string>();
    a.artifact_digest = j.at("artifact_digest").get<std::string>();
    return a;
}

std::string CompiledArtifact::serialize() const {
    return to_json().dump(2) + "\n";
}

CompiledArtifact CompiledArtifact::deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error("MalformedDocument", std::string("artifact parse failure: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw Error("MalformedDocument", std::string("artifact structure: ") + e.what());
    }
}

std::string CompiledArtifact::content_digest() const {
    json j = to_json();
    j["artifact_digest"] = "";
    return sha256_hex(j.dump());
}

void CompiledArtifact::finalize(const std::string& validation_digest_value) {
    validation_digest = validation_digest_value;
    artifact_digest = content_digest();
}

bool CompiledArtifact::digest_intact() const {
    return !artifact_digest.empty() && artifact_digest == content_digest();
}

dsl::VerdictSet CompiledArtifact::verdict_set() const {
    dsl::VerdictSet vs = dsl::VerdictSet::standard();
    for (const auto& code : verdict_codes) vs.add(code);
    return vs;
}

dsl::RuleChain CompiledArtifact::compiled_chain(const RuleStep& rule) const {
    if (!rule.parsed) {
        throw Error("ArtifactInvalid",
                    "rule step '" + rule.name + "' carries unparsed logic: " + rule.parse_error);
    }
    dsl::RuleChain chain = dsl::parse_rule(rule.chain_text, verdict_set());
    for (std::size_t i = 0; i < chain.branches.size(); ++i) {
        chain.branches[i].verdict.reason =
            i < rule.branch_reasons.size() ? rule.branch_reasons[i]
                                           : "rule " + std::to_string(i + 1);
    }
    chain.default_verdict.reason = rule.default_reason.empty() ? "default" : rule.default_reason;
    return chain;
}

std::vector<std::pair<std::string, std::string>> CompiledArtifact::scannable_texts() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& m : modules) {
        for (const auto& [key, value] : m.parameters) {
            out.emplace_back("module:" + m.id + "." + key, value);
        }
    }
    for (const auto& s : steps) {
        if (s.type == spec::StepType::deterministic_rule) {
            out.emplace_back("step:" + s.rule.name + ".logic", s.rule.chain_text);
        }
    }
    return out;
}

}  // namespace foundry::artifact
