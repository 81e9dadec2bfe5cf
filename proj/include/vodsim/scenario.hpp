#pragma once

// Scenario configuration, sweep orchestration and the analytic cross-check
// behind the vodsim command line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vodsim/engine.hpp"
#include "vodsim/metrics.hpp"
#include "vodsim/traffic.hpp"

namespace vodsim::scenario {

enum class StrategySelection { uncontrolled, policy, both };
enum class PolicyPreset { uniform, capacity_proportional, explicit_weights };
enum class SweepMode {
    global_load,  // point c scales every cluster by rate_c / min_rate
    per_cluster,  // fixed load; point c reports class c
};

/// Defaults reproduce the 30-cluster, 30-partition, 500 s reference setup.
struct ScenarioConfig {
    int num_clusters = 30;
    double min_rate = 1.0;   // Mb/s
    double max_rate = 15.5;  // Mb/s
    double per_stream_bandwidth = 0.5;
    double interactive_rate = 0.0;
    int num_partitions = 30;
    int ports_per_partition = 10;
    double min_hold = 1.0;
    double max_hold = 200.0;
    double horizon = 500.0;
    double warmup = 50.0;
    int replications = 20;
    std::uint64_t seed = 1;
    StrategySelection strategy = StrategySelection::both;
    PolicyPreset policy_preset = PolicyPreset::uniform;
    std::vector<double> weights;  // used by PolicyPreset::explicit_weights
    engine::WeightScaling weight_scaling = engine::WeightScaling::literal;
    double threshold = 0.05;
    SweepMode sweep_mode = SweepMode::global_load;
    double analytic_horizon = 5000.0;
    unsigned threads = 0;  // 0 = one per hardware thread

    /// Throws ConfigError on any inconsistent field.
    void validate() const;

    traffic::WorkloadSpec workload() const;
    std::vector<std::uint32_t> capacities() const;
    engine::StrategySpec policy_strategy() const;
    /// Strategies selected by `strategy`, uncontrolled first.
    std::vector<engine::StrategySpec> strategies() const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses `key = value` lines over the defaults. `#` starts a comment.
/// Leaving `warmup` unset makes it 10% of `horizon`. Errors name the line.
ScenarioConfig parse_config(std::string_view text);

/// Seed of replication `replication` at sweep point `point`.
constexpr std::uint64_t replication_seed(std::uint64_t base, std::size_t point,
                                         std::size_t replication) noexcept {
    return base + static_cast<std::uint64_t>(point) * 10007ULL +
           static_cast<std::uint64_t>(replication);
}

/// Raw replications behind one sweep point.
struct PointRuns {
    double traffic_rate = 0.0;
    double offered_erlangs = 0.0;
    std::string strategy;
    std::optional<std::size_t> class_filter;  // per_cluster mode only
    std::vector<metrics::RunMetrics> replications;
};

/// One entry per (cluster rate, strategy), replications in index order.
/// Runs may execute on several threads; the result is identical to
/// sequential execution.
std::vector<PointRuns> simulate_sweep(const ScenarioConfig& config);

metrics::SweepPoint summarize(const PointRuns& point);

/// simulate_sweep() reduced to sweep statistics.
std::vector<metrics::SweepPoint> run_sweep(const ScenarioConfig& config);

/// Only the first sweep point (every cluster at its configured base rate).
std::vector<metrics::SweepPoint> run_base_point(const ScenarioConfig& config);

struct AnalyticComparison {
    double offered_erlangs = 0.0;
    std::uint32_t ports = 0;
    double analytic_blocking = 0.0;
    double simulated_blocking = 0.0;
    double ci95_halfwidth = 0.0;
    double abs_difference = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Simulates a single-partition uncontrolled server for
/// `analytic_horizon` seconds (10% warmup) and compares its blocking with
/// Erlang-B at the total offered load. Throws InvalidArgument unless the
/// config has exactly one partition.
AnalyticComparison compare_analytic(const ScenarioConfig& config, double tolerance);

}  // namespace vodsim::scenario
