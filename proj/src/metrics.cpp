#include "foundry/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

using nlohmann::json;

namespace foundry::metrics {

long long TokenLedger::per_tx(const std::string& strategy) const {
    auto it = runtime_tokens_per_tx.find(strategy);
    if (it == runtime_tokens_per_tx.end()) {
        throw Error("UnknownStrategy", "no per-transaction count for strategy '" + strategy + "'");
    }
    return it->second;
}

void TokenLedger::merge(const TokenLedger& other) {
    gen_tokens_input += other.gen_tokens_input;
    gen_tokens_output += other.gen_tokens_output;
    for (const auto& [k, v] : other.runtime_tokens_per_tx) {
        runtime_tokens_per_tx[k] += v;
    }
}

TokenLedger TokenLedger::load(const std::string& path) {
    json doc = json::parse(read_file(path));
    TokenLedger ledger;
    ledger.gen_tokens_input = doc.at("gen_tokens_input").get<long long>();
    ledger.gen_tokens_output = doc.at("gen_tokens_output").get<long long>();
    ledger.runtime_tokens_per_tx =
        doc.at("runtime_tokens_per_tx").get<std::map<std::string, long long>>();
    return ledger;
}

void TokenLedger::save(const std::string& path) const {
    json doc;
    doc["gen_tokens_input"] = gen_tokens_input;
    doc["gen_tokens_output"] = gen_tokens_output;
    doc["runtime_tokens_per_tx"] = runtime_tokens_per_tx;
    write_file_atomic(path, doc.dump(2) + "\n");
}

PricingModel PricingModel::load(const std::string& path) {
    json doc = json::parse(read_file(path));
    PricingModel p;
    p.input_per_million = doc.at("input_per_million").get<double>();
    p.output_per_million = doc.at("output_per_million").get<double>();
    p.infra_monthly = doc.at("infra_monthly").get<double>();
    if (doc.contains("inference_monthly")) {
        p.inference_monthly = doc.at("inference_monthly").get<std::map<std::string, double>>();
    }
    return p;
}

double break_even(long long gen_tokens, long long runtime_per_tx, long long compiled_per_tx) {
    const long long gap = runtime_per_tx - compiled_per_tx;
    if (gap <= 0) {
        throw Error("NoBreakEven",
                    "runtime strategy spends no more per transaction than compiled; "
                    "one-time generation cost never amortizes");
    }
    return static_cast<double>(gen_tokens) / static_cast<double>(gap);
}

double compression_ratio(const TokenLedger& ledger, long long n, const std::string& strategy) {
    if (n < 1) throw Error("InvalidArgument", "transaction count must be >= 1");
    const double total_runtime = static_cast<double>(ledger.per_tx(strategy)) * static_cast<double>(n);
    const double total_compiled = static_cast<double>(ledger.gen_total()) +
                                  static_cast<double>(ledger.per_tx(kStrategyCompiled)) *
                                      static_cast<double>(n);
    if (total_compiled == 0.0) {
        throw Error("DivisionByZero", "compiled strategy has zero total tokens");
    }
    return total_runtime / total_compiled;
}

TcoResult tco(double inference_cost, double infra_cost, double base_total) {
    if (inference_cost < 0 || infra_cost < 0) {
        throw Error("InvalidArgument", "costs must be non-negative");
    }
    TcoResult r;
    r.total = inference_cost + infra_cost;
    r.ratio = base_total > 0.0 ? r.total / base_total : 0.0;
    return r;
}

EntropyReport entropy(const std::vector<std::string>& output_digests) {
    if (output_digests.empty()) throw Error("EmptyRunSet", "entropy over zero runs is undefined");
    std::map<std::string, std::size_t> counts;
    for (const auto& d : output_digests) ++counts[d];

    EntropyReport report;
    report.runs = output_digests.size();
    report.distinct = counts.size();
    const double n = static_cast<double>(report.runs);
    for (const auto& [digest, count] : counts) {
        (void)digest;
        report.frequencies.push_back(static_cast<double>(count) / n);
    }
    std::sort(report.frequencies.rbegin(), report.frequencies.rend());
    double h = 0.0;
    for (double p : report.frequencies) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    // -0.0 from the single-outcome case reads badly in reports.
    report.entropy_bits = h == 0.0 ? 0.0 : h;
    report.reproducibility = report.frequencies.front();
    return report;
}

LatencyStats latency_stats(std::vector<double> samples_ms) {
    if (samples_ms.size() < 100) {
        throw Error("InsufficientSamples",
                    "need >= 100 samples for stable percentiles, got " +
                        std::to_string(samples_ms.size()));
    }
    std::sort(samples_ms.begin(), samples_ms.end());
    auto nearest_rank = [&samples_ms](double pct) {
        const std::size_t n = samples_ms.size();
        std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
        if (rank == 0) rank = 1;
        if (rank > n) rank = n;
        return samples_ms[rank - 1];
    };
    LatencyStats stats;
    stats.p50_ms = nearest_rank(50.0);
    stats.p99_ms = nearest_rank(99.0);
    stats.jitter_ms = stats.p99_ms - stats.p50_ms;
    return stats;
}

ReliabilityReport reliability_report(const std::vector<bool>& compile_outcomes,
                                     const std::vector<bool>& execution_outcomes) {
    ReliabilityReport r;
    r.compile_attempts = compile_outcomes.size();
    r.compile_passes = static_cast<std::size_t>(
        std::count(compile_outcomes.begin(), compile_outcomes.end(), true));
    r.compile_rate = r.compile_attempts == 0
                         ? 0.0
                         : static_cast<double>(r.compile_passes) /
                               static_cast<double>(r.compile_attempts);
    r.executions = execution_outcomes.size();
    r.execution_passes = static_cast<std::size_t>(
        std::count(execution_outcomes.begin(), execution_outcomes.end(), true));
    if (r.executions > 0) {
        r.deployed_rate =
            static_cast<double>(r.execution_passes) / static_cast<double>(r.executions);
    }
    return r;
}

}  // namespace foundry::metrics
