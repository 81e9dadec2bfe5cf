#pragma once

// Run counters, blocking estimates and the sweep CSV format.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vodsim::metrics {

struct ClassCounts {
    std::uint64_t offered = 0;
    std::uint64_t admitted = 0;
    std::uint64_t policed = 0;
    std::uint64_t blocked = 0;

    bool conserved() const noexcept { return offered == admitted + policed + blocked; }
    ClassCounts& operator+=(const ClassCounts& other) noexcept;
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Post-warmup counters of one simulation run. Construction rejects
/// counters that violate offered = admitted + policed + blocked.
class RunMetrics {
public:
    RunMetrics(std::vector<ClassCounts> per_class, double horizon, double warmup,
               std::uint64_t seed);

    const ClassCounts& total() const noexcept { return total_; }
    std::span<const ClassCounts> per_class() const noexcept { return per_class_; }
    double horizon() const noexcept { return horizon_; }
    double warmup() const noexcept { return warmup_; }
    std::uint64_t seed() const noexcept { return seed_; }

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;

private:
    ClassCounts total_;
    std::vector<ClassCounts> per_class_;
    double horizon_;
    double warmup_;
    std::uint64_t seed_;
};

enum class BlockingScope {
    server,        // blocked / (offered - policed)
    total_denial,  // (blocked + policed) / offered
};

/// nullopt when the denominator is zero: the metric is undefined, not 0.
std::optional<double> blocking_probability(const ClassCounts& counts, BlockingScope scope);
std::optional<double> blocking_probability(const RunMetrics& m, BlockingScope scope);

/// Fraction of offered requests rejected by the class gate.
std::optional<double> policed_fraction(const ClassCounts& counts);

struct Estimate {
    std::optional<double> mean;   // absent when no sample was defined
    double ci95_halfwidth = 0.0;  // 1.96 s / sqrt(n)
    std::size_t samples = 0;
    bool degenerate() const noexcept { return samples < 2; }
};

/// Mean and normal-approximation 95% half-width of the given samples.
/// Undefined samples are skipped. The result does not depend on sample order.
Estimate estimate(std::span<const std::optional<double>> samples);

/// Blocking estimate across replications. Throws InvalidArgument when empty.
Estimate aggregate(std::span<const RunMetrics> replications, BlockingScope scope);
Estimate aggregate(std::span<const ClassCounts> replications, BlockingScope scope);

struct SweepPoint {
    double traffic_rate = 0.0;     // Mb/s
    double offered_erlangs = 0.0;
    std::string strategy;
    std::vector<RunMetrics> replications;
    Estimate server;
    Estimate total_denial;
    std::optional<double> mean_policed_fraction;
};

/// Builds a sweep point from its replications. With `class_filter`, the
/// statistics cover only that request class.
SweepPoint make_sweep_point(double traffic_rate, double offered_erlangs, std::string strategy,
                            std::vector<RunMetrics> replications,
                            std::optional<std::size_t> class_filter = std::nullopt);

inline constexpr std::string_view kCsvHeader =
    "traffic_rate_mbps,offered_erlangs,strategy,replications,mean_server_blocking,ci95_server,"
    "mean_total_denial,ci95_total,mean_policed_fraction";

/// Header plus one row per point, ordered by traffic rate then strategy.
/// Numbers use at most 12 significant digits; undefined values are empty.
std::string to_csv(std::span<const SweepPoint> points);

struct CsvRow {
    double traffic_rate_mbps = 0.0;
    double offered_erlangs = 0.0;
    std::string strategy;
    std::size_t replications = 0;
    std::optional<double> mean_server_blocking;
    double ci95_server = 0.0;
    std::optional<double> mean_total_denial;
    double ci95_total = 0.0;
    std::optional<double> mean_policed_fraction;
};

/// Inverse of to_csv. Throws InvalidArgument on a malformed document.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Shortest %.12g rendering used by the CSV writer.
std::string format_number(double value);

}  // namespace vodsim::metrics
