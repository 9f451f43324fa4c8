#include "foundry/batch.hpp"

#include <atomic>
#include <chrono>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace foundry::runtime {

namespace {

struct RepetitionSlot {
    std::string digest;
    double duration_ms = 0.0;
    int calls = 0;
    StepOutcome outcome;
};

RepetitionSlot run_one(const artifact::CompiledArtifact& art,
                       const std::map<std::string, dsl::Value>& inputs,
                       const client::ClientFactory& make_client, const BatchOptions& options,
                       int index) {
    RunPolicy policy;
    policy.instance_id = options.instance_prefix + "-" + std::to_string(index);
    policy.gate_policy = options.gate_policy;
    policy.rules = options.rules;

    std::unique_ptr<client::GeneratorClient> client = make_client ? make_client() : nullptr;

    const auto start = std::chrono::steady_clock::now();
    RunResult r = run_workflow(art, inputs, client.get(), policy);
    const auto stop = std::chrono::steady_clock::now();

    RepetitionSlot slot;
    slot.digest = std::move(r.output_digest);
    slot.duration_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    slot.calls = r.quarantined_calls;
    slot.outcome = std::move(r.outcome);
    return slot;
}

}  // namespace

BatchResult run_batch(const artifact::CompiledArtifact& art,
                      const std::map<std::string, dsl::Value>& inputs,
                      const client::ClientFactory& make_client, const BatchOptions& options) {
    const int n = options.repetitions;
    if (n <= 0) throw Error("InvalidArgument", "repetitions must be positive");

    std::vector<RepetitionSlot> slots(static_cast<std::size_t>(n));

    if (options.mode == BatchMode::serial) {
        for (int i = 0; i < n; ++i) {
            slots[static_cast<std::size_t>(i)] = run_one(art, inputs, make_client, options, i);
        }
    } else {
        // Repetitions are independent; slots are written by index so the
        // result order matches the serial reference exactly.
        std::atomic<bool> failed{false};
        std::string failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int i = 0; i < n; ++i) {
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                slots[static_cast<std::size_t>(i)] = run_one(art, inputs, make_client, options, i);
            } catch (const std::exception& e) {
                bool expected = false;
                if (failed.compare_exchange_strong(expected, true)) {
                    failure = e.what();
                }
            }
        }
        if (failed.load()) throw Error("BatchFailure", failure);
    }

    BatchResult result;
    result.digests.reserve(slots.size());
    result.durations_ms.reserve(slots.size());
    for (auto& s : slots) {
        result.digests.push_back(std::move(s.digest));
        result.durations_ms.push_back(s.duration_ms);
        result.total_quarantined_calls += s.calls;
    }
    result.first_outcome = slots.front().outcome;
    return result;
}

}  // namespace foundry::runtime
