#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foundry/util.hpp"

namespace foundry::metrics {

// Token accounting for the economics report. Generation tokens are the
// one-time compile cost; per-transaction counts are what each strategy
// spends at runtime. Merge is associative and commutative so ledgers from
// concurrent compiles combine safely.
struct TokenLedger {
    long long gen_tokens_input = 0;
    long long gen_tokens_output = 0;
    std::map<std::string, long long> runtime_tokens_per_tx;  // strategy -> tokens/tx

    long long gen_total() const { return gen_tokens_input + gen_tokens_output; }
    long long per_tx(const std::string& strategy) const;

    void merge(const TokenLedger& other);

    static TokenLedger load(const std::string& path);
    void save(const std::string& path) const;
};

inline constexpr const char* kStrategyDirect = "direct_llm";
inline constexpr const char* kStrategyLangchain = "langchain_style";
inline constexpr const char* kStrategyAutogen = "autogen_style";
inline constexpr const char* kStrategyCompiled = "compiled";

struct PricingModel {
    double input_per_million = 0.0;
    double output_per_million = 0.0;
    double infra_monthly = 0.0;
    // Pre-computed monthly inference dollars per strategy. Kept explicit:
    // deriving them from per-tx tokens requires an input/output split the
    // source figures do not carry.
    std::map<std::string, double> inference_monthly;

    static PricingModel load(const std::string& path);
};

// Transactions after which one-time generation cost amortizes below
// cumulative runtime spend: gen / (runtime_per_tx - compiled_per_tx).
// Exact real value; callers round for presentation. Throws
// Error("NoBreakEven") when the denominator is <= 0.
double break_even(long long gen_tokens, long long runtime_per_tx, long long compiled_per_tx);

// total_runtime(n) / total_compiled(n) for the given runtime strategy,
// where total_compiled(n) = gen_total + n * compiled_per_tx. Throws
// Error("DivisionByZero") when total_compiled is zero.
double compression_ratio(const TokenLedger& ledger, long long n,
                         const std::string& strategy = kStrategyDirect);

struct TcoResult {
    double total = 0.0;
    double ratio = 0.0;  // total / base_total
};

// Total cost of ownership for one strategy and its ratio against a baseline
// total (the compiled strategy in the shipped reports).
TcoResult tco(double inference_cost, double infra_cost, double base_total);

struct EntropyReport {
    std::size_t runs = 0;
    std::size_t distinct = 0;
    std::vector<double> frequencies;  // descending
    double entropy_bits = 0.0;
    double reproducibility = 0.0;  // max frequency
};

// Shannon entropy (base 2) over the distinct-output distribution. Throws
// Error("EmptyRunSet") on empty input.
EntropyReport entropy(const std::vector<std::string>& output_digests);

struct LatencyStats {
    double p50_ms = 0.0;
    double p99_ms = 0.0;
    double jitter_ms = 0.0;  // p99 - p50
};

// Nearest-rank percentiles. Requires >= 100 samples for stability; throws
// Error("InsufficientSamples") below that.
LatencyStats latency_stats(std::vector<double> samples_ms);

struct ReliabilityReport {
    std::size_t compile_attempts = 0;
    std::size_t compile_passes = 0;
    double compile_rate = 0.0;
    std::size_t executions = 0;
    std::size_t execution_passes = 0;
    // Absent when no validated artifact executed.
    std::optional<double> deployed_rate;
};

ReliabilityReport reliability_report(const std::vector<bool>& compile_outcomes,
                                     const std::vector<bool>& execution_outcomes);

}  // namespace foundry::metrics
