#pragma once

// Multirate client workload and seeded Poisson request generation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <boost/random/exponential_distribution.hpp>

#include "vodsim/random.hpp"

namespace vodsim::traffic {

/// One client population (cluster). Its index doubles as the request class.
struct ClusterSpec {
    int class_id = 0;
    double traffic_rate = 0.0;      // Mb/s
    double request_rate = 0.0;      // steady-session requests/s
    double mean_holding = 0.0;      // s
    double interactive_rate = 0.0;  // interactive requests/s
};

struct WorkloadSpec {
    std::vector<ClusterSpec> clusters;
    double per_stream_bandwidth = 0.5;  // Mb/s per admitted stream
    double min_hold = 1.0;
    double max_hold = 200.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError if any invariant is violated.
    void validate() const;

    /// Total request arrival rate over all clusters and both session kinds.
    double total_rate() const;
    /// Offered Erlangs: sum over clusters of (arrival rate x mean holding).
    double offered_erlangs() const;
};

enum class SessionKind { steady, interactive };

struct SessionRequest {
    int class_id = 0;
    double arrival_time = 0.0;
    double holding_time = 0.0;
    SessionKind kind = SessionKind::steady;
};

/// `count` clusters whose traffic rates are linearly spaced over
/// [min_rate, max_rate]. Only class_id and traffic_rate are filled in;
/// make_workload() derives the rest.
std::vector<ClusterSpec> build_clusters(int count, double min_rate, double max_rate);

/// Streams per second needed to carry `traffic_rate` Mb/s.
double request_rate(double traffic_rate, double per_stream_bandwidth);

struct WorkloadParams {
    double per_stream_bandwidth = 0.5;
    double min_hold = 1.0;
    double max_hold = 200.0;
    double interactive_rate = 0.0;
    std::uint64_t seed = 0;
};

/// Binds clusters to a workload: derives request rates from bandwidth and
/// draws each cluster's mean holding time once, uniformly on
/// [min_hold, max_hold], from a generator seeded with params.seed.
WorkloadSpec make_workload(std::vector<ClusterSpec> clusters, const WorkloadParams& params);

/// Copy of `spec` with every arrival rate (and traffic rate) multiplied by
/// `factor`. Holding times are unchanged.
WorkloadSpec scale_arrivals(const WorkloadSpec& spec, double factor);

namespace detail {
[[noreturn]] void throw_bad_rate(double rate);
[[noreturn]] void throw_bad_mean(double mean);
}  // namespace detail

/// Exponential inter-arrival gap with mean 1/rate (ziggurat sampling).
inline double next_interarrival(Rng& rng, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        detail::throw_bad_rate(rate);
    }
    return boost::random::exponential_distribution<double>(rate)(rng);
}

/// Exponential holding time with the given mean.
inline double sample_holding(Rng& rng, double mean_holding) {
    if (!(mean_holding > 0.0) || !std::isfinite(mean_holding)) {
        detail::throw_bad_mean(mean_holding);
    }
    return boost::random::exponential_distribution<double>(1.0)(rng) * mean_holding;
}

/// A request as produced by ArrivalStream before its holding time is drawn.
struct Arrival {
    int class_id = 0;
    double time = 0.0;
    SessionKind kind = SessionKind::steady;
    std::uint64_t index = 0;     // position in the stream
    std::uint32_t category = 0;  // (cluster, kind) source that produced it
};

/// Superposition of one independent Poisson source per (cluster, session
/// kind), generated in its marked form: a single Poisson stream at the
/// total rate whose arrivals are independently labelled with source c
/// with probability rate_c / total (alias method). By the colouring
/// theorem the labelled sub-streams are independent Poisson processes with
/// the per-source rates.
///
/// The holding time of arrival n is drawn from a generator seeded by
/// (seed, n), so callers that discard a request never pay for its holding
/// time and the values do not depend on which requests were inspected.
class ArrivalStream {
public:
    ArrivalStream(const WorkloadSpec& spec, std::uint64_t seed);

    /// Next arrival before `horizon`, or nullopt. An arrival at or past
    /// `horizon` is kept for a later call with a larger horizon.
    std::optional<Arrival> next_arrival(double horizon) {
        if (cursor_ == pending_.size()) {
            if (sources_.empty()) {
                return std::nullopt;
            }
            refill();
        }
        const Pending& p = pending_[cursor_];
        if (!(p.time < horizon)) {
            return std::nullopt;
        }
        ++cursor_;
        const Source& src = sources_[p.category];
        return Arrival{src.class_id, p.time, src.kind, emitted_++, p.category};
    }
    /// Holding time of an arrival previously returned by this stream.
    double holding_time(const Arrival& arrival) const;
    /// next_arrival() together with its holding time.
    std::optional<SessionRequest> next(double horizon);

    double total_rate() const noexcept { return total_rate_; }

private:
    struct Source {
        double rate;
        double mean_holding;
        int class_id;
        SessionKind kind;
    };

    struct Pending {
        double time;
        std::uint32_t category;
    };

    // Arrivals are generated in blocks; the draws and their order are the
    // same as generating them one at a time.
    static constexpr std::size_t kBlock = 256;
    void refill();

    std::uint32_t pick_source(Rng& rng) const {
        const double u = rng.uniform_open() * static_cast<double>(sources_.size());
        // u * n may round up to n itself.
        const auto column = std::min(static_cast<std::size_t>(u), sources_.size() - 1);
        const double coin = u - static_cast<double>(column);
        return coin < alias_threshold_[column] ? static_cast<std::uint32_t>(column)
                                               : alias_[column];
    }

    std::vector<Source> sources_;
    std::vector<double> alias_threshold_;
    std::vector<std::uint32_t> alias_;
    double total_rate_ = 0.0;
    double now_ = 0.0;
    std::vector<Pending> pending_;
    std::size_t cursor_ = 0;
    std::uint64_t emitted_ = 0;
    Rng rng_;
    std::uint64_t holding_seed_;
};

/// Materializes every request arriving in [0, horizon) using spec.seed.
std::vector<SessionRequest> merged_arrival_stream(const WorkloadSpec& spec, double horizon);

}  // namespace vodsim::traffic
