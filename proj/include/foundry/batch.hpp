#pragma once

#include <string>
#include <vector>

#include "foundry/executor.hpp"

namespace foundry::runtime {

// Repeated independent executions of one artifact on fixed inputs: the
// measurement loop behind determinism (distinct output digests over N runs)
// and latency reporting. Runs are pure given a deterministic client, so the
// loop is data-parallel; the serial variant is the reference the parallel
// one is tested against.
enum class BatchMode { serial, parallel };

struct BatchOptions {
    int repetitions = 1000;
    BatchMode mode = BatchMode::serial;
    gates::GatePolicy gate_policy;
    const gates::RuleSet* rules = nullptr;
    std::string instance_prefix = "batch";
};

struct BatchResult {
    std::vector<std::string> digests;      // per-repetition output digest
    std::vector<double> durations_ms;      // per-repetition wall time
    StepOutcome first_outcome;
    long long total_quarantined_calls = 0;
};

// `make_client` is invoked once per repetition (clients carry per-call
// state); it may return nullptr for deterministic-only artifacts.
BatchResult run_batch(const artifact::CompiledArtifact& art,
                      const std::map<std::string, dsl::Value>& inputs,
                      const client::ClientFactory& make_client, const BatchOptions& options);

}  // namespace foundry::runtime
