#include "foundry/executor.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace foundry::runtime {

namespace {

std::int64_t wall_clock_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

const gates::RuleSet& effective_rules(const RunPolicy& policy) {
    static const gates::RuleSet builtin = gates::RuleSet::builtin();
    return policy.rules ? *policy.rules : builtin;
}

}  // namespace

json AuditEvent::to_json(bool include_wall_clock) const {
    json j;
    j["instance_id"] = instance_id;
    j["seq"] = seq;
    j["kind"] = kind;
    j["payload"] = payload;
    if (include_wall_clock) j["wall_clock_ms"] = wall_clock_ms;
    return j;
}

AuditEvent AuditEvent::from_json(const json& j) {
    AuditEvent e;
    e.instance_id = j.at("instance_id").get<std::string>();
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
    e.wall_clock_ms = j.value("wall_clock_ms", std::int64_t{0});
    return e;
}

namespace {

void check_sequence(std::map<std::string, std::uint64_t>& last_seq, const AuditEvent& event) {
    std::uint64_t& last = last_seq[event.instance_id];
    if (event.seq != last + 1) {
        throw Error("SequenceGap", "audit event for instance '" + event.instance_id +
                                       "' carries sequence " + std::to_string(event.seq) +
                                       ", expected " + std::to_string(last + 1));
    }
    last = event.seq;
}

}  // namespace

void MemoryAuditLog::append(const AuditEvent& event) {
    check_sequence(last_seq_, event);
    events_.push_back(event);
}

FileAuditLog::FileAuditLog(std::string path) : path_(std::move(path)) {}

void FileAuditLog::append(const AuditEvent& event) {
    std::lock_guard<std::mutex> lock(mutex_);
    check_sequence(last_seq_, event);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("WriteFailure", "cannot open audit log " + path_);
    out << event.to_json().dump() << "\n";
}

std::vector<AuditEvent> FileAuditLog::read_all(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open audit log " + path);
    std::vector<AuditEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        events.push_back(AuditEvent::from_json(json::parse(line)));
    }
    return events;
}

dsl::Value value_from_json(const json& j) {
    if (j.is_null()) return dsl::Value::null();
    if (j.is_boolean()) return dsl::Value(j.get<bool>());
    if (j.is_number_integer() || j.is_number_unsigned()) return dsl::Value(j.get<long long>());
    if (j.is_number_float()) return dsl::Value(j.get<double>());
    if (j.is_string()) return dsl::Value(j.get<std::string>());
    throw Error("InputTypeMismatch", "unsupported value: " + j.dump());
}

json value_to_json(const dsl::Value& v) {
    if (v.is_null()) return nullptr;
    if (v.is_bool()) return v.as_bool();
    if (v.is_int()) return v.as_int();
    if (v.is_real()) return v.as_number();
    return v.as_string();
}

std::map<std::string, dsl::Value> parse_input_bindings(const json& doc,
                                                       const std::vector<spec::InputDecl>& decls) {
    if (!doc.is_object()) throw Error("InputTypeMismatch", "input document must be an object");
    std::map<std::string, dsl::Value> bindings;
    for (const auto& decl : decls) {
        if (!doc.contains(decl.name)) {
            throw Error("InputTypeMismatch", "missing input '" + decl.name + "'");
        }
        dsl::Value v = value_from_json(doc.at(decl.name));
        const bool ok = [&] {
            if (v.is_null()) return false;
            switch (decl.kind) {
                case spec::ValueKind::boolean: return v.is_bool();
                case spec::ValueKind::integer: return v.is_int();
                case spec::ValueKind::real: return v.is_number();  // integers widen
                case spec::ValueKind::string:
                case spec::ValueKind::text: return v.is_string();
            }
            return false;
        }();
        if (!ok) {
            throw Error("InputTypeMismatch", "input '" + decl.name + "' does not conform to kind " +
                                                 spec::value_kind_name(decl.kind));
        }
        bindings.emplace(decl.name, std::move(v));
    }
    for (const auto& [key, _] : doc.items()) {
        (void)_;
        bool declared = false;
        for (const auto& decl : decls) {
            if (decl.name == key) {
                declared = true;
                break;
            }
        }
        if (!declared) throw Error("InputTypeMismatch", "undeclared input '" + key + "'");
    }
    return bindings;
}

// --- bounded invocation -------------------------------------------------------

namespace {

std::string render_schema(const spec::SchemaDecl& schema) {
    std::string out;
    for (const auto& [name, f] : schema.entries) {
        out += name;
        out += ": ";
        out += spec::value_kind_name(f.kind);
        if (f.nullable) out += " (nullable)";
        out += "\n";
    }
    return out;
}

// Strict decode of a quarantined response against the step schema. Extra
// fields are violations: the hallucination surface stays closed.
std::optional<std::string> decode_extraction(const std::string& text,
                                             const spec::SchemaDecl& schema,
                                             std::map<std::string, dsl::Value>& out) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        return std::string("response is not valid JSON: ") + e.what();
    }
    if (!doc.is_object()) return std::string("response must be a JSON object");

    for (const auto& [key, _] : doc.items()) {
        (void)_;
        if (!schema.find(key)) return "undeclared field '" + key + "' in response";
    }
    for (const auto& [name, field] : schema.entries) {
        if (!doc.contains(name)) return "missing field '" + name + "'";
        const json& jv = doc.at(name);
        if (jv.is_null()) {
            if (!field.nullable) return "field '" + name + "' is not nullable";
            out.emplace(name, dsl::Value::null());
            continue;
        }
        dsl::Value v = value_from_json(jv);
        const bool ok = [&] {
            switch (field.kind) {
                case spec::ValueKind::boolean: return v.is_bool();
                case spec::ValueKind::integer: return v.is_int();
                case spec::ValueKind::real: return v.is_number();
                case spec::ValueKind::string: return v.is_string();
                default: return false;
            }
        }();
        if (!ok) {
            return "field '" + name + "' has wrong kind (expected " +
                   spec::value_kind_name(field.kind) + ")";
        }
        out.emplace(name, std::move(v));
    }
    return std::nullopt;
}

}  // namespace

BoundedOutcome run_bounded_step(const artifact::BoundedStep& step,
                                const std::map<std::string, dsl::Value>& bindings,
                                const std::string& sanitized_text,
                                client::GeneratorClient& quarantined, int max_attempts,
                                const gates::CanaryToken& canary, const gates::GatePolicy& policy,
                                const gates::RuleSet& rules, const EventEmitter& emit) {
    BoundedOutcome outcome;
    auto note = [&emit](const std::string& kind, json payload) {
        if (emit) emit(kind, std::move(payload));
    };

    client::Prompt prompt;
    prompt.sections.push_back({"step", step.name});
    prompt.sections.push_back({"input", sanitized_text});
    prompt.sections.push_back({"schema", render_schema(step.schema)});
    if (!step.prompt_hint.empty()) prompt.sections.push_back({"hint", step.prompt_hint});
    prompt.sections.push_back(
        {"contract",
         "Return exactly one JSON object with every declared field and no others. "
         "Use null only for nullable fields. No prose."});
    prompt.sections.push_back({"canary", canary.value});

    std::string last_violation = "extraction failed";
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        outcome.attempts_used = attempt;
        std::vector<std::string> violations;
        std::map<std::string, dsl::Value> values;
        std::string last_reason;

        try {
            client::Generation gen = quarantined.generate(prompt);

            // The raw response passes the output gate before anything reads it.
            gates::OutputScanResult leak_scan =
                gates::output_gate_scan(gen.text, canary, policy, rules);
            if (leak_scan.leaked) {
                note(kEventGateFinding, {{"gate", "output"},
                                         {"rule_id", leak_scan.leak->rule_id},
                                         {"step", step.name},
                                         {"action", "block"}});
                violations.push_back("response blocked: canary leak detected");
                last_reason = "prompt leakage detected";
            } else if (auto err = decode_extraction(gen.text, step.schema, values)) {
                violations.push_back(*err);
                last_reason = *err;
            } else {
                // Schema accepted; apply the declared validation bounds.
                std::map<std::string, dsl::Value> merged = bindings;
                for (const auto& [k, v] : values) merged[k] = v;
                dsl::EvalContext ctx{merged, dsl::NullPolicy::skip_validation};
                for (const auto& validation : step.validations) {
                    dsl::Expr expr = dsl::parse_expr(validation.expr);
                    dsl::ValidationOutcome vo = dsl::evaluate_validation(expr, ctx);
                    if (vo.status == dsl::ValidationOutcome::Status::fail) {
                        violations.push_back("validation failed: " + validation.expr);
                        last_reason = validation.reason;
                    }
                }
            }
        } catch (const Error& e) {
            if (std::string(e.code()) != "ClientUnavailable") throw;
            // Transport failure consumes the same retry budget as a
            // validation failure.
            violations.push_back(std::string("client failure: ") + e.what());
            last_reason = "client failure";
        }

        if (violations.empty()) {
            json values_json = json::object();
            for (const auto& [k, v] : values) values_json[k] = value_to_json(v);
            note(kEventInvocationAttempt, {{"step", step.name},
                                           {"attempt", attempt},
                                           {"accepted", true},
                                           {"values", values_json}});
            outcome.values = std::move(values);
            return outcome;
        }

        outcome.violations += 1;
        last_violation = last_reason.empty() ? violations.front() : last_reason;
        note(kEventInvocationAttempt, {{"step", step.name},
                                       {"attempt", attempt},
                                       {"accepted", false},
                                       {"violations", violations}});
        // Feedback for the next attempt; the retry prompt strictly grows.
        prompt.sections.push_back(
            {"feedback:attempt" + std::to_string(attempt),
             "Previous response rejected: " + violations.front()});
    }

    outcome.escalated = true;
    outcome.escalation_reason = last_violation;
    return outcome;
}

dsl::Verdict evaluate_decision_step(const dsl::RuleChain& chain,
                                    const std::map<std::string, dsl::Value>& bindings) {
    dsl::EvalContext ctx{bindings, dsl::NullPolicy::escalate_decision};
    return dsl::evaluate_chain(chain, ctx);
}

// --- run_workflow ---------------------------------------------------------------

namespace {

class InstanceTrail {
public:
    InstanceTrail(std::string instance_id, AuditSink* sink)
        : instance_id_(std::move(instance_id)), sink_(sink) {}

    void emit(const std::string& kind, json payload) {
        AuditEvent event;
        event.instance_id = instance_id_;
        event.seq = ++clock_;
        event.kind = kind;
        event.payload = std::move(payload);
        event.wall_clock_ms = wall_clock_now_ms();
        memory_.append(event);
        if (sink_) sink_->append(event);
    }

    const std::vector<AuditEvent>& events() const { return memory_.events(); }

private:
    std::string instance_id_;
    AuditSink* sink_;
    MemoryAuditLog memory_;
    std::uint64_t clock_ = 0;
};

std::string inputs_digest(const std::map<std::string, dsl::Value>& inputs) {
    json j = json::object();
    for (const auto& [k, v] : inputs) j[k] = value_to_json(v);
    return sha256_hex(j.dump());
}

std::string run_digest(const StepOutcome& outcome, const std::vector<AuditEvent>& events) {
    json j;
    j["outcome"] = {{"status", outcome.status},
                    {"reason", outcome.reason_code},
                    {"escalated", outcome.escalated}};
    json evs = json::array();
    for (const auto& e : events) {
        // Determinism digest: sequence, kind and payload only. Instance id
        // and wall clock vary across repetitions by design.
        evs.push_back({{"seq", e.seq}, {"kind", e.kind}, {"payload", e.payload}});
    }
    j["events"] = std::move(evs);
    return sha256_hex(j.dump());
}

}  // namespace

RunResult run_workflow(const artifact::CompiledArtifact& art,
                       const std::map<std::string, dsl::Value>& inputs,
                       client::GeneratorClient* quarantined, const RunPolicy& policy) {
    if (!art.artifact_digest.empty() && !art.digest_intact()) {
        throw Error("ArtifactDigestMismatch",
                    "artifact content does not match its recorded digest; refusing to execute");
    }
    if (quarantined && quarantined->role() != client::Role::quarantined) {
        throw Error("RoleViolation", "run_workflow requires a quarantined client");
    }

    // Input conformance against the compiled declarations.
    {
        json doc = json::object();
        for (const auto& [k, v] : inputs) doc[k] = value_to_json(v);
        parse_input_bindings(doc, art.inputs);
    }

    const gates::RuleSet& rules = effective_rules(policy);
    const int max_attempts = policy.max_attempts > 0 ? policy.max_attempts : art.max_attempts;
    const int base_calls = quarantined ? quarantined->calls() : 0;

    InstanceTrail trail(policy.instance_id, policy.sink);
    RunResult result;
    const std::string in_digest = inputs_digest(inputs);

    auto finish = [&](StepOutcome outcome) {
        if (outcome.escalated) {
            trail.emit(kEventEscalation, {{"reason", outcome.reason_code}});
        }
        trail.emit(kEventDecision, {{"decision", outcome.status},
                                    {"reason", outcome.reason_code},
                                    {"logic_version", art.logic_version},
                                    {"input_digest", in_digest}});
        result.outcome = std::move(outcome);
        result.events = trail.events();
        result.output_digest = run_digest(result.outcome, result.events);
        result.quarantined_calls = quarantined ? quarantined->calls() - base_calls : 0;
        return result;
    };

    // Phase 0: input gate over declared text inputs.
    std::map<std::string, dsl::Value> bindings = inputs;
    std::string sanitized_text;
    for (const auto& decl : art.inputs) {
        if (decl.kind != spec::ValueKind::text) continue;
        const std::string& raw = inputs.at(decl.name).as_string();
        gates::InputScanResult scan = gates::input_gate_scan(raw, policy.gate_policy, rules);
        for (const auto& f : scan.findings) {
            trail.emit(kEventGateFinding, {{"gate", "input"},
                                           {"rule_id", f.rule_id},
                                           {"input", decl.name},
                                           {"action", gates::action_name(f.action)},
                                           {"category", f.category}});
        }
        if (scan.blocked()) {
            // Fail safe: blocked input never reaches a model or a verdict.
            std::string rule_id;
            for (const auto& f : scan.findings) {
                if (f.action == gates::GateAction::block) {
                    rule_id = f.rule_id;
                    break;
                }
            }
            return finish({"HUMAN_REVIEW", "input gate: " + rule_id, true});
        }
        bindings[decl.name] = dsl::Value(scan.sanitized);
        if (!sanitized_text.empty()) sanitized_text += "\n";
        sanitized_text += scan.sanitized;
    }

    gates::CanaryToken canary;
    if (art.canary_enabled) {
        canary = gates::mint_canary(policy.instance_id, 0);
    }

    std::optional<dsl::Verdict> last_rule_verdict;
    int drift = 0;

    for (const auto& step : art.steps) {
        if (step.type == spec::StepType::bounded_invocation) {
            if (!quarantined) {
                throw Error("ClientRequired", "artifact declares bounded invocation step '" +
                                                  step.bounded.name +
                                                  "' but no quarantined client was provided");
            }
            BoundedOutcome bo = run_bounded_step(
                step.bounded, bindings, sanitized_text, *quarantined, max_attempts, canary,
                policy.gate_policy, rules,
                [&trail](const std::string& kind, json payload) {
                    trail.emit(kind, std::move(payload));
                });
            drift += bo.violations;
            result.drift_violations = drift;
            if (bo.escalated) {
                return finish({"HUMAN_REVIEW", bo.escalation_reason, true});
            }
            // Hallucination-validation phase record for the accepted values.
            {
                std::map<std::string, dsl::Value> merged = bindings;
                for (const auto& [k, v] : bo.values) merged[k] = v;
                dsl::EvalContext ctx{merged, dsl::NullPolicy::skip_validation};
                for (const auto& validation : step.bounded.validations) {
                    dsl::Expr expr = dsl::parse_expr(validation.expr);
                    dsl::ValidationOutcome vo = dsl::evaluate_validation(expr, ctx);
                    const char* status =
                        vo.status == dsl::ValidationOutcome::Status::pass
                            ? "pass"
                            : (vo.skipped() ? "skipped_null" : "fail");
                    trail.emit(kEventValidationResult,
                               {{"step", step.bounded.name}, {"expr", validation.expr}, {"outcome", status}});
                }
            }
            for (auto& [k, v] : bo.values) bindings[k] = std::move(v);
        } else {
            dsl::RuleChain chain = art.compiled_chain(step.rule);
            dsl::Verdict verdict = evaluate_decision_step(chain, bindings);
            last_rule_verdict = verdict;
            if (verdict.code == "HUMAN_REVIEW") {
                return finish({verdict.code, verdict.reason, true});
            }
            if (&step != &art.steps.back()) {
                trail.emit(kEventValidationResult, {{"step", step.rule.name},
                                                    {"expr", "rule chain"},
                                                    {"outcome", "verdict " + verdict.code}});
            }
        }
    }

    StepOutcome outcome;
    if (last_rule_verdict) {
        outcome.status = last_rule_verdict->code;
        outcome.reason_code = last_rule_verdict->reason;
        outcome.escalated = outcome.status == "HUMAN_REVIEW";
    } else {
        outcome = {"COMPLETED", "all steps completed", false};
    }

    // Final output gate on the outbound text.
    if (art.canary_enabled) {
        const std::string outbound = outcome.status + " " + outcome.reason_code;
        gates::OutputScanResult scan =
            gates::output_gate_scan(outbound, canary, policy.gate_policy, rules);
        for (const auto& f : scan.findings) {
            trail.emit(kEventGateFinding, {{"gate", "output"},
                                           {"rule_id", f.rule_id},
                                           {"action", gates::action_name(f.action)},
                                           {"category", f.category}});
        }
        if (scan.leaked) {
            trail.emit(kEventGateFinding,
                       {{"gate", "output"}, {"rule_id", scan.leak->rule_id}, {"action", "block"}});
            return finish({"HUMAN_REVIEW", "output blocked: prompt leakage detected", true});
        }
    }
    return finish(std::move(outcome));
}

// --- replay ----------------------------------------------------------------------

StepOutcome replay(const artifact::CompiledArtifact& art, const std::vector<AuditEvent>& events) {
    const AuditEvent* decision = nullptr;
    for (const auto& e : events) {
        if (e.kind == kEventDecision) decision = &e;
    }
    if (!decision) throw Error("ReplayDivergence", "log carries no decision event");

    const std::string logged_version = decision->payload.value("logic_version", "");
    if (logged_version != art.logic_version) {
        throw Error("ReplayDivergence", "log was produced by logic_version '" + logged_version +
                                            "' but artifact is '" + art.logic_version + "'");
    }

    // Input-gate block short-circuits before any step ran.
    const std::string logged_decision = decision->payload.value("decision", "");
    const std::string logged_reason = decision->payload.value("reason", "");
    if (logged_decision == "HUMAN_REVIEW" && logged_reason.rfind("input gate:", 0) == 0) {
        return {logged_decision, logged_reason, true};
    }

    // Collect the accepted extraction values per bounded step.
    std::map<std::string, std::map<std::string, dsl::Value>> accepted;
    std::map<std::string, bool> step_escalated;
    for (const auto& e : events) {
        if (e.kind != kEventInvocationAttempt) continue;
        const std::string step = e.payload.value("step", "");
        if (e.payload.value("accepted", false)) {
            std::map<std::string, dsl::Value> values;
            for (const auto& [k, v] : e.payload.at("values").items()) {
                values[k] = value_from_json(v);
            }
            accepted[step] = std::move(values);
            step_escalated[step] = false;
        } else if (!accepted.count(step)) {
            step_escalated[step] = true;
        }
    }

    StepOutcome outcome{"COMPLETED", "all steps completed", false};
    std::map<std::string, dsl::Value> bindings;
    bool terminated = false;
    for (const auto& step : art.steps) {
        if (step.type == spec::StepType::bounded_invocation) {
            auto it = accepted.find(step.bounded.name);
            if (it == accepted.end()) {
                // The recorded run exhausted its retries here.
                std::string reason = logged_reason;
                for (const auto& e : events) {
                    if (e.kind == kEventEscalation) reason = e.payload.value("reason", reason);
                }
                outcome = {"HUMAN_REVIEW", reason, true};
                terminated = true;
                break;
            }
            for (const auto& [k, v] : it->second) bindings[k] = v;
            // Re-run the hallucination-validation phase on the restored
            // values: a log that claims acceptance for values violating the
            // declared bounds has been tampered with. Bounds referencing
            // fields unavailable at replay are skipped, not guessed.
            for (const auto& validation : step.bounded.validations) {
                try {
                    dsl::Expr expr = dsl::parse_expr(validation.expr);
                    dsl::EvalContext ctx{bindings, dsl::NullPolicy::skip_validation};
                    if (dsl::evaluate_validation(expr, ctx).status ==
                        dsl::ValidationOutcome::Status::fail) {
                        throw Error("ReplayDivergence",
                                    "logged values for step '" + step.bounded.name +
                                        "' violate accepted bound: " + validation.expr);
                    }
                } catch (const Error& e) {
                    if (std::string(e.code()) == "ReplayDivergence") throw;
                }
            }
        } else {
            dsl::RuleChain chain = art.compiled_chain(step.rule);
            // Logged text inputs are not replayed through chains: chains in
            // compiled artifacts reference typed fields, which either come
            // from extractions (restored above) or typed inputs recorded in
            // the decision input digest. Non-text inputs are not logged, so
            // replay is defined for extraction-driven workflows; a chain
            // field absent from the restored bindings raises UnboundField
            // and surfaces as divergence.
            try {
                dsl::Verdict v = evaluate_decision_step(chain, bindings);
                outcome = {v.code, v.reason, v.code == "HUMAN_REVIEW"};
                if (outcome.escalated) {
                    terminated = true;
                    break;
                }
            } catch (const Error& e) {
                throw Error("ReplayDivergence",
                            std::string("deterministic phase failed during replay: ") + e.what());
            }
        }
    }
    (void)terminated;

    if (outcome.status != logged_decision || outcome.reason_code != logged_reason) {
        throw Error("ReplayDivergence", "replayed outcome " + outcome.status + " ('" +
                                            outcome.reason_code + "') does not match logged " +
                                            logged_decision + " ('" + logged_reason + "')");
    }
    return outcome;
}

bool safety_sandwich_ordered(const std::vector<AuditEvent>& events) {
    // Phase rank per step: invocation (0) -> validation (1); the decision
    // event outranks everything.
    std::map<std::string, int> step_phase;
    bool decision_seen = false;
    for (const auto& e : events) {
        if (decision_seen) return false;  // nothing follows the decision
        if (e.kind == kEventDecision) {
            decision_seen = true;
            continue;
        }
        if (e.kind == kEventInvocationAttempt) {
            const std::string step = e.payload.value("step", "");
            if (step_phase[step] > 0) return false;
        } else if (e.kind == kEventValidationResult) {
            const std::string step = e.payload.value("step", "");
            step_phase[step] = 1;
        }
    }
    return decision_seen;
}

}  // namespace foundry::runtime
