#include "vodsim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <thread>

#include "vodsim/analytic.hpp"
#include "vodsim/errors.hpp"

namespace vodsim::scenario {
namespace {

// A failed check and the config keys it concerns, most specific first.
struct Violation {
    std::vector<std::string_view> keys;
    std::string message;
};

std::optional<Violation> find_violation(const ScenarioConfig& c) {
    auto fail = [](std::vector<std::string_view> keys, std::string msg) {
        return std::optional<Violation>(Violation{std::move(keys), std::move(msg)});
    };
    auto finite = [](double x) { return std::isfinite(x); };

    if (c.num_clusters < 1) {
        return fail({"num_clusters"}, "num_clusters must be at least 1");
    }
    if (!finite(c.min_rate) || c.min_rate < 0.0) {
        return fail({"min_rate"}, "min_rate must be finite and non-negative");
    }
    if (!finite(c.max_rate) || c.max_rate < c.min_rate) {
        return fail({"max_rate", "min_rate"}, "max_rate must be finite and >= min_rate");
    }
    if (!finite(c.per_stream_bandwidth) || c.per_stream_bandwidth <= 0.0) {
        return fail({"per_stream_bandwidth"}, "per_stream_bandwidth must be positive");
    }
    if (!finite(c.interactive_rate) || c.interactive_rate < 0.0) {
        return fail({"interactive_rate"}, "interactive_rate must be non-negative");
    }
    if (c.num_partitions < 1) {
        return fail({"num_partitions"}, "num_partitions must be at least 1");
    }
    if (c.ports_per_partition < 0) {
        return fail({"ports_per_partition"}, "ports_per_partition must be non-negative");
    }
    if (!finite(c.min_hold) || c.min_hold <= 0.0) {
        return fail({"min_hold"}, "min_hold must be positive");
    }
    if (!finite(c.max_hold) || c.max_hold <= 0.0) {
        return fail({"max_hold"}, "max_hold must be positive");
    }
    if (c.min_hold > c.max_hold) {
        return fail({"min_hold", "max_hold"}, "min_hold must not exceed max_hold");
    }
    if (!finite(c.horizon) || c.horizon <= 0.0) {
        return fail({"horizon"}, "horizon must be positive");
    }
    if (!finite(c.warmup) || c.warmup < 0.0 || c.warmup >= c.horizon) {
        return fail({"warmup", "horizon"}, "warmup must lie in [0, horizon)");
    }
    if (c.replications < 1) {
        return fail({"replications"}, "replications must be at least 1");
    }
    if (!finite(c.threshold) || c.threshold < 0.0 || c.threshold > 1.0) {
        return fail({"threshold"}, "threshold must lie in [0,1]");
    }
    if (!finite(c.analytic_horizon) || c.analytic_horizon <= 0.0) {
        return fail({"analytic_horizon"}, "analytic_horizon must be positive");
    }
    if (c.policy_preset == PolicyPreset::explicit_weights) {
        if (c.weights.size() != static_cast<std::size_t>(c.num_clusters)) {
            return fail({"weights", "num_clusters"},
                        "weights must list one entry per cluster (" +
                            std::to_string(c.num_clusters) + ")");
        }
    } else if (!c.weights.empty()) {
        return fail({"weights", "policy_preset"}, "weights are only used with policy_preset = explicit");
    }
    if (c.policy_preset == PolicyPreset::capacity_proportional && c.ports_per_partition == 0) {
        return fail({"policy_preset", "ports_per_partition"},
                    "capacity_proportional weights need non-zero capacity");
    }
    try {
        (void)c.policy_strategy();
    } catch (const InvalidArgument& e) {
        return fail({"weights", "policy_preset"}, e.what());
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

struct LineError {
    std::string message;
};

double as_double(std::string_view v) {
    double out = 0.0;
    if (!parse_number(v, out)) {
        throw LineError{"expected a number, got '" + std::string(v) + "'"};
    }
    return out;
}

int as_int(std::string_view v) {
    long long out = 0;
    if (!parse_number(v, out) || out < -(1LL << 31) || out >= (1LL << 31)) {
        throw LineError{"expected an integer, got '" + std::string(v) + "'"};
    }
    return static_cast<int>(out);
}

std::uint64_t as_u64(std::string_view v) {
    std::uint64_t out = 0;
    if (!parse_number(v, out)) {
        throw LineError{"expected an unsigned 64-bit integer, got '" + std::string(v) + "'"};
    }
    return out;
}

template <typename Enum>
Enum as_enum(std::string_view v, std::initializer_list<std::pair<std::string_view, Enum>> names) {
    std::string options;
    for (const auto& [name, value] : names) {
        if (v == name) {
            return value;
        }
        options += options.empty() ? "" : "|";
        options += name;
    }
    throw LineError{"expected one of " + options + ", got '" + std::string(v) + "'"};
}

std::vector<double> as_list(std::string_view v) {
    std::vector<double> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(as_double(trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) {
            break;
        }
        v.remove_prefix(comma + 1);
        if (trim(v).empty()) {
            throw LineError{"trailing comma in list"};
        }
    }
    if (out.empty()) {
        throw LineError{"expected a comma-separated list of numbers"};
    }
    return out;
}

using Setter = std::function<void(ScenarioConfig&, std::string_view)>;

const std::map<std::string_view, Setter>& setters() {
    using engine::WeightScaling;
    static const std::map<std::string_view, Setter> table = {
        {"num_clusters", [](auto& c, auto v) { c.num_clusters = as_int(v); }},
        {"min_rate", [](auto& c, auto v) { c.min_rate = as_double(v); }},
        {"max_rate", [](auto& c, auto v) { c.max_rate = as_double(v); }},
        {"per_stream_bandwidth", [](auto& c, auto v) { c.per_stream_bandwidth = as_double(v); }},
        {"interactive_rate", [](auto& c, auto v) { c.interactive_rate = as_double(v); }},
        {"num_partitions", [](auto& c, auto v) { c.num_partitions = as_int(v); }},
        {"ports_per_partition", [](auto& c, auto v) { c.ports_per_partition = as_int(v); }},
        {"min_hold", [](auto& c, auto v) { c.min_hold = as_double(v); }},
        {"max_hold", [](auto& c, auto v) { c.max_hold = as_double(v); }},
        {"horizon", [](auto& c, auto v) { c.horizon = as_double(v); }},
        {"warmup", [](auto& c, auto v) { c.warmup = as_double(v); }},
        {"replications", [](auto& c, auto v) { c.replications = as_int(v); }},
        {"seed", [](auto& c, auto v) { c.seed = as_u64(v); }},
        {"strategy",
         [](auto& c, auto v) {
             c.strategy = as_enum<StrategySelection>(v, {{"uncontrolled", StrategySelection::uncontrolled},
                                                         {"policy", StrategySelection::policy},
                                                         {"both", StrategySelection::both}});
         }},
        {"policy_preset",
         [](auto& c, auto v) {
             c.policy_preset = as_enum<PolicyPreset>(
                 v, {{"uniform", PolicyPreset::uniform},
                     {"capacity_proportional", PolicyPreset::capacity_proportional},
                     {"explicit", PolicyPreset::explicit_weights}});
         }},
        {"weights", [](auto& c, auto v) { c.weights = as_list(v); }},
        {"weight_scaling",
         [](auto& c, auto v) {
             c.weight_scaling = as_enum<WeightScaling>(
                 v, {{"literal", WeightScaling::literal},
                     {"max_normalized", WeightScaling::max_normalized}});
         }},
        {"threshold", [](auto& c, auto v) { c.threshold = as_double(v); }},
        {"sweep_mode",
         [](auto& c, auto v) {
             c.sweep_mode = as_enum<SweepMode>(v, {{"global_load", SweepMode::global_load},
                                                   {"per_cluster", SweepMode::per_cluster}});
         }},
        {"analytic_horizon", [](auto& c, auto v) { c.analytic_horizon = as_double(v); }},
        {"threads",
         [](auto& c, auto v) {
             const int n = as_int(v);
             if (n < 0) {
                 throw LineError{"threads must be non-negative"};
             }
             c.threads = static_cast<unsigned>(n);
         }},
    };
    return table;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. If any call
// throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<PointRuns> simulate_points(const ScenarioConfig& config, std::size_t point_count) {
    config.validate();
    const traffic::WorkloadSpec base = config.workload();
    const std::vector<std::uint32_t> caps = config.capacities();
    const std::vector<engine::StrategySpec> strategies = config.strategies();
    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t n_strat = strategies.size();
    const engine::RunConfig timing{config.horizon, config.warmup, 0};

    std::vector<PointRuns> points;

    if (config.sweep_mode == SweepMode::per_cluster) {
        std::vector<std::optional<metrics::RunMetrics>> runs(n_strat * reps);
        parallel_for(runs.size(), config.threads, [&](std::size_t task) {
            const std::size_t s = task / reps;
            const std::size_t r = task % reps;
            engine::RunConfig rc = timing;
            rc.seed = replication_seed(config.seed, 0, r);
            runs[task] = engine::run(base, caps, strategies[s], rc);
        });
        for (std::size_t c = 0; c < point_count; ++c) {
            const auto& cluster = base.clusters[c];
            const double erlangs =
                (cluster.request_rate + cluster.interactive_rate) * cluster.mean_holding;
            for (std::size_t s = 0; s < n_strat; ++s) {
                PointRuns p{cluster.traffic_rate, erlangs, strategies[s].name(), c, {}};
                for (std::size_t r = 0; r < reps; ++r) {
                    p.replications.push_back(*runs[s * reps + r]);
                }
                points.push_back(std::move(p));
            }
        }
        return points;
    }

    if (point_count > 1 && !(config.min_rate > 0.0)) {
        throw ConfigError("a global_load sweep scales by rate / min_rate and needs min_rate > 0");
    }
    // The first point is the unscaled workload.
    std::vector<traffic::WorkloadSpec> loads;
    loads.reserve(point_count);
    for (std::size_t c = 0; c < point_count; ++c) {
        const double factor = c == 0 ? 1.0 : base.clusters[c].traffic_rate / config.min_rate;
        loads.push_back(traffic::scale_arrivals(base, factor));
    }

    std::vector<std::optional<metrics::RunMetrics>> runs(point_count * n_strat * reps);
    parallel_for(runs.size(), config.threads, [&](std::size_t task) {
        const std::size_t c = task / (n_strat * reps);
        const std::size_t s = (task / reps) % n_strat;
        const std::size_t r = task % reps;
        engine::RunConfig rc = timing;
        rc.seed = replication_seed(config.seed, c, r);
        runs[task] = engine::run(loads[c], caps, strategies[s], rc);
    });

    for (std::size_t c = 0; c < point_count; ++c) {
        for (std::size_t s = 0; s < n_strat; ++s) {
            PointRuns p{base.clusters[c].traffic_rate, loads[c].offered_erlangs(),
                        strategies[s].name(), std::nullopt, {}};
            for (std::size_t r = 0; r < reps; ++r) {
                p.replications.push_back(std::move(*runs[(c * n_strat + s) * reps + r]));
            }
            points.push_back(std::move(p));
        }
    }
    return points;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (const auto v = find_violation(*this)) {
        throw ConfigError(std::string(v->keys.front()) + ": " + v->message);
    }
}

traffic::WorkloadSpec ScenarioConfig::workload() const {
    traffic::WorkloadParams params;
    params.per_stream_bandwidth = per_stream_bandwidth;
    params.min_hold = min_hold;
    params.max_hold = max_hold;
    params.interactive_rate = interactive_rate;
    params.seed = seed;
    return traffic::make_workload(traffic::build_clusters(num_clusters, min_rate, max_rate), params);
}

std::vector<std::uint32_t> ScenarioConfig::capacities() const {
    return std::vector<std::uint32_t>(static_cast<std::size_t>(num_partitions),
                                      static_cast<std::uint32_t>(ports_per_partition));
}

engine::StrategySpec ScenarioConfig::policy_strategy() const {
    switch (policy_preset) {
        case PolicyPreset::uniform:
            return engine::StrategySpec::policy(
                analytic::PolicyWeights::uniform(static_cast<std::size_t>(num_clusters)),
                weight_scaling);
        case PolicyPreset::capacity_proportional: {
            const auto caps = capacities();
            std::vector<double> scores;
            for (int c = 0; c < num_clusters; ++c) {
                scores.push_back(caps[static_cast<std::size_t>(c) % caps.size()]);
            }
            return engine::StrategySpec::policy(analytic::PolicyWeights::proportional(scores),
                                                weight_scaling);
        }
        case PolicyPreset::explicit_weights:
            return engine::StrategySpec::policy(analytic::PolicyWeights(weights), weight_scaling);
    }
    throw InternalError("unknown policy preset");
}

std::vector<engine::StrategySpec> ScenarioConfig::strategies() const {
    std::vector<engine::StrategySpec> out;
    if (strategy != StrategySelection::policy) {
        out.push_back(engine::StrategySpec::uncontrolled());
    }
    if (strategy != StrategySelection::uncontrolled) {
        out.push_back(policy_strategy());
    }
    return out;
}

ScenarioConfig parse_config(std::string_view text) {
    ScenarioConfig config;
    std::map<std::string_view, std::size_t> key_lines;

    std::size_t line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            if (text.empty()) {
                break;
            }
            continue;
        }
        const auto where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& table = setters();
        const auto it = table.find(key);
        if (it == table.end()) {
            throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        }
        if (key_lines.contains(it->first)) {
            throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
        }
        if (value.empty()) {
            throw ConfigError(where + "missing value for '" + std::string(key) + "'");
        }
        try {
            it->second(config, value);
        } catch (const LineError& e) {
            throw ConfigError(where + std::string(key) + ": " + e.message);
        }
        key_lines[it->first] = line_no;
    }

    if (!key_lines.contains("warmup")) {
        config.warmup = 0.1 * config.horizon;
    }
    if (key_lines.contains("weights") && !key_lines.contains("policy_preset")) {
        config.policy_preset = PolicyPreset::explicit_weights;
    }

    if (const auto v = find_violation(config)) {
        for (const auto key : v->keys) {
            if (const auto it = key_lines.find(key); it != key_lines.end()) {
                throw ConfigError("line " + std::to_string(it->second) + ": " + v->message);
            }
        }
        throw ConfigError(v->message);
    }
    return config;
}

std::vector<PointRuns> simulate_sweep(const ScenarioConfig& config) {
    return simulate_points(config, static_cast<std::size_t>(config.num_clusters));
}

metrics::SweepPoint summarize(const PointRuns& point) {
    return metrics::make_sweep_point(point.traffic_rate, point.offered_erlangs, point.strategy,
                                     point.replications, point.class_filter);
}

std::vector<metrics::SweepPoint> run_sweep(const ScenarioConfig& config) {
    std::vector<metrics::SweepPoint> out;
    for (const auto& p : simulate_sweep(config)) {
        out.push_back(summarize(p));
    }
    return out;
}

std::vector<metrics::SweepPoint> run_base_point(const ScenarioConfig& config) {
    ScenarioConfig base = config;
    base.sweep_mode = SweepMode::global_load;
    std::vector<metrics::SweepPoint> out;
    for (const auto& p : simulate_points(base, 1)) {
        out.push_back(summarize(p));
    }
    return out;
}

AnalyticComparison compare_analytic(const ScenarioConfig& config, double tolerance) {
    config.validate();
    if (config.num_partitions != 1) {
        throw InvalidArgument(
            "compare-analytic needs num_partitions = 1; multi-partition occupancies are "
            "correlated and have no closed form here");
    }
    if (!std::isfinite(tolerance) || tolerance < 0.0) {
        throw InvalidArgument("tolerance must be finite and non-negative");
    }
    const traffic::WorkloadSpec workload = config.workload();
    const std::vector<std::uint32_t> caps = config.capacities();
    const auto uncontrolled = engine::StrategySpec::uncontrolled();
    const engine::RunConfig timing{config.analytic_horizon, 0.1 * config.analytic_horizon, 0};

    std::vector<std::optional<metrics::RunMetrics>> runs(
        static_cast<std::size_t>(config.replications));
    parallel_for(runs.size(), config.threads, [&](std::size_t r) {
        engine::RunConfig rc = timing;
        rc.seed = replication_seed(config.seed, 0, r);
        runs[r] = engine::run(workload, caps, uncontrolled, rc);
    });
    std::vector<metrics::RunMetrics> reps;
    for (auto& r : runs) {
        reps.push_back(std::move(*r));
    }
    const metrics::Estimate est = metrics::aggregate(reps, metrics::BlockingScope::server);

    AnalyticComparison out;
    out.offered_erlangs = workload.offered_erlangs();
    out.ports = caps.front();
    out.analytic_blocking =
        analytic::erlang_b(analytic::OfferedLoad(out.offered_erlangs), {out.ports});
    // No offered requests means nothing was blocked.
    out.simulated_blocking = est.mean.value_or(0.0);
    out.ci95_halfwidth = est.ci95_halfwidth;
    out.abs_difference = std::abs(out.simulated_blocking - out.analytic_blocking);
    out.tolerance = tolerance;
    out.pass = out.abs_difference < tolerance;
    return out;
}

}  // namespace vodsim::scenario
