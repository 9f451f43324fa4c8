#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "foundry/util.hpp"

namespace foundry::client {

// Dual-LLM role separation: the privileged client sees trusted compile-time
// context (templates, prompt blocks); the quarantined client sees only
// sanitized runtime input. The compile path accepts privileged clients only
// and the executor accepts quarantined clients only.
enum class Role { privileged, quarantined };

const char* role_name(Role r);

struct PromptSection {
    std::string label;
    std::string text;
};

struct Prompt {
    std::vector<PromptSection> sections;

    std::string concatenated() const;
    // Stable content hash; a pure function of the sections.
    std::string digest() const;
};

struct Generation {
    std::string text;
    long long input_tokens = 0;
    long long output_tokens = 0;
};

class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;

    virtual Role role() const = 0;
    virtual std::string id() const = 0;

    // Throws Error("ClientUnavailable") on transport failure.
    virtual Generation generate(const Prompt& prompt) = 0;

    int calls() const { return calls_; }

protected:
    void count_call() { ++calls_; }

private:
    int calls_ = 0;
};

using ClientFactory = std::function<std::unique_ptr<GeneratorClient>()>;

// Fixture mode: responses keyed by prompt digest. Missing keys raise
// ClientUnavailable so a drifted prompt fails loudly instead of silently
// generating nothing.
class FixtureClient : public GeneratorClient {
public:
    explicit FixtureClient(Role role, std::string id = "mock-fixture");

    void add(const std::string& prompt_digest, Generation response);
    static FixtureClient load(const std::string& path, Role role);

    Role role() const override { return role_; }
    std::string id() const override { return id_; }
    Generation generate(const Prompt& prompt) override;

private:
    Role role_;
    std::string id_;
    std::map<std::string, Generation> responses_;
};

// Scripted mode: ordered responses, one per call. `repeat_last` keeps
// returning the final response once the script is exhausted (deterministic
// batch runs); otherwise exhaustion raises ClientUnavailable.
class ScriptedClient : public GeneratorClient {
public:
    ScriptedClient(Role role, std::vector<Generation> script, bool repeat_last = false,
                   std::string id = "mock-scripted");

    Role role() const override { return role_; }
    std::string id() const override { return id_; }
    Generation generate(const Prompt& prompt) override;

private:
    Role role_;
    std::string id_;
    std::vector<Generation> script_;
    std::size_t next_ = 0;
    bool repeat_last_;
};

// Quarantined-side mock for executing fixtures: returns a fixed JSON value
// map per step (the prompt's "step" section selects it). `fail_first` calls
// raise ClientUnavailable first, standing in for transport faults.
class MappedExtractionClient : public GeneratorClient {
public:
    explicit MappedExtractionClient(std::map<std::string, std::string> step_to_json,
                                    int fail_first = 0, std::string id = "mock-extraction");

    Role role() const override { return Role::quarantined; }
    std::string id() const override { return id_; }
    Generation generate(const Prompt& prompt) override;

private:
    std::string id_;
    std::map<std::string, std::string> step_to_json_;
    int fail_first_;
    int failures_so_far_ = 0;
};

// Fault mode: parameterized corruptions of a base response, one knob per
// pipeline branch that must reject generated output.
enum class FaultKind {
    unknown_verdict,  // rewrites verdicts to an undeclared code
    type_mismatch,    // replaces a numeric field value with a string
    out_of_range,     // replaces numeric values with implausible magnitudes
    canary_echo,      // appends any canary token found in the prompt
    injection_text,   // appends a canonical injection phrase
};

class FaultClient : public GeneratorClient {
public:
    FaultClient(Role role, FaultKind kind, std::string base_text, std::string id = "mock-fault");

    Role role() const override { return role_; }
    std::string id() const override { return id_; }
    Generation generate(const Prompt& prompt) override;

private:
    Role role_;
    FaultKind kind_;
    std::string base_text_;
    std::string id_;
};

// HTTP-backed client implementing the generator wire contract: POST
// /generate with {sections, grammar}; response {text, input_tokens,
// output_tokens}.
class HttpGeneratorClient : public GeneratorClient {
public:
    HttpGeneratorClient(Role role, std::string base_url, std::string id = "http");

    Role role() const override { return role_; }
    std::string id() const override { return id_; }
    Generation generate(const Prompt& prompt) override;

    static constexpr const char* kGrammarId = "rule-dsl-v1";

private:
    Role role_;
    std::string base_url_;
    std::string id_;
};

}  // namespace foundry::client
