#include "vodsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vodsim/errors.hpp"

namespace vodsim::traffic {
namespace {

bool finite_non_negative(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void WorkloadSpec::validate() const {
    if (!finite_positive(per_stream_bandwidth)) {
        throw ConfigError("per_stream_bandwidth must be positive");
    }
    if (!finite_positive(min_hold) || !finite_positive(max_hold)) {
        throw ConfigError("holding-time bounds must be positive");
    }
    if (min_hold > max_hold) {
        throw ConfigError("min_hold must not exceed max_hold");
    }
    for (const auto& c : clusters) {
        if (c.class_id < 0) {
            throw ConfigError("cluster class ids must be non-negative");
        }
        if (!finite_non_negative(c.traffic_rate) || !finite_non_negative(c.request_rate) ||
            !finite_non_negative(c.interactive_rate)) {
            throw ConfigError("cluster " + std::to_string(c.class_id) +
                              " has a negative or non-finite rate");
        }
        if (c.mean_holding < min_hold || c.mean_holding > max_hold) {
            throw ConfigError("cluster " + std::to_string(c.class_id) +
                              " mean holding time lies outside [min_hold, max_hold]");
        }
    }
}

double WorkloadSpec::total_rate() const {
    double total = 0.0;
    for (const auto& c : clusters) {
        total += c.request_rate + c.interactive_rate;
    }
    return total;
}

double WorkloadSpec::offered_erlangs() const {
    double total = 0.0;
    for (const auto& c : clusters) {
        total += (c.request_rate + c.interactive_rate) * c.mean_holding;
    }
    return total;
}

std::vector<ClusterSpec> build_clusters(int count, double min_rate, double max_rate) {
    if (count <= 0) {
        throw InvalidArgument("cluster count must be positive");
    }
    if (!finite_non_negative(min_rate) || !finite_non_negative(max_rate)) {
        throw InvalidArgument("cluster traffic rates must be finite and non-negative");
    }
    if (min_rate > max_rate) {
        throw InvalidArgument("min_rate must not exceed max_rate");
    }
    std::vector<ClusterSpec> clusters(static_cast<std::size_t>(count));
    const double step = count > 1 ? (max_rate - min_rate) / static_cast<double>(count - 1) : 0.0;
    for (int c = 0; c < count; ++c) {
        auto& cluster = clusters[static_cast<std::size_t>(c)];
        cluster.class_id = c;
        cluster.traffic_rate = c == count - 1 && count > 1 ? max_rate : min_rate + c * step;
    }
    return clusters;
}

double request_rate(double traffic_rate, double per_stream_bandwidth) {
    if (!finite_positive(per_stream_bandwidth)) {
        throw InvalidArgument("per-stream bandwidth must be positive");
    }
    if (!finite_non_negative(traffic_rate)) {
        throw InvalidArgument("traffic rate must be finite and non-negative");
    }
    return traffic_rate / per_stream_bandwidth;
}

WorkloadSpec make_workload(std::vector<ClusterSpec> clusters, const WorkloadParams& params) {
    if (!finite_non_negative(params.interactive_rate)) {
        throw InvalidArgument("interactive rate must be finite and non-negative");
    }
    WorkloadSpec spec;
    spec.per_stream_bandwidth = params.per_stream_bandwidth;
    spec.min_hold = params.min_hold;
    spec.max_hold = params.max_hold;
    spec.seed = params.seed;
    spec.clusters = std::move(clusters);
    if (!(params.min_hold <= params.max_hold)) {
        throw InvalidArgument("min_hold must not exceed max_hold");
    }

    Rng rng(derive_seed(params.seed, 0xC1D5));
    for (auto& c : spec.clusters) {
        c.request_rate = request_rate(c.traffic_rate, params.per_stream_bandwidth);
        c.interactive_rate = params.interactive_rate;
        c.mean_holding = params.min_hold == params.max_hold
                             ? params.min_hold
                             : rng.uniform(params.min_hold, params.max_hold);
    }
    spec.validate();
    return spec;
}

WorkloadSpec scale_arrivals(const WorkloadSpec& spec, double factor) {
    if (!finite_non_negative(factor)) {
        throw InvalidArgument("arrival scale factor must be finite and non-negative");
    }
    WorkloadSpec scaled = spec;
    for (auto& c : scaled.clusters) {
        c.traffic_rate *= factor;
        c.request_rate *= factor;
        c.interactive_rate *= factor;
    }
    return scaled;
}

namespace detail {

void throw_bad_rate(double rate) {
    throw InvalidArgument("arrival rate must be positive, got " + std::to_string(rate));
}

void throw_bad_mean(double mean) {
    throw InvalidArgument("mean holding time must be positive, got " + std::to_string(mean));
}

}  // namespace detail

ArrivalStream::ArrivalStream(const WorkloadSpec& spec, std::uint64_t seed)
    : rng_(derive_seed(seed, 0)), holding_seed_(derive_seed(seed, 1)) {
    spec.validate();
    for (const auto& c : spec.clusters) {
        if (c.request_rate > 0.0) {
            sources_.push_back({c.request_rate, c.mean_holding, c.class_id, SessionKind::steady});
        }
        if (c.interactive_rate > 0.0) {
            sources_.push_back(
                {c.interactive_rate, c.mean_holding, c.class_id, SessionKind::interactive});
        }
    }
    for (const auto& src : sources_) {
        total_rate_ += src.rate;
    }

    // Vose's alias table over the source rates.
    const std::size_t n = sources_.size();
    alias_threshold_.assign(n, 1.0);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        alias_[i] = static_cast<std::uint32_t>(i);
        scaled[i] = sources_[i].rate * static_cast<double>(n) / total_rate_;
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const std::uint32_t s = small.back();
        small.pop_back();
        const std::uint32_t l = large.back();
        alias_threshold_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // Whatever remains is 1 up to rounding and keeps its own index.
}

void ArrivalStream::refill() {
    Rng rng = rng_;
    double t = now_;
    pending_.resize(kBlock);
    const bool single = sources_.size() == 1;
    for (auto& p : pending_) {
        t += next_interarrival(rng, total_rate_);
        p = {t, single ? 0u : pick_source(rng)};
    }
    rng_ = rng;
    now_ = t;
    cursor_ = 0;
}

double ArrivalStream::holding_time(const Arrival& arrival) const {
    Rng rng(derive_seed(holding_seed_, arrival.index));
    return sample_holding(rng, sources_.at(arrival.category).mean_holding);
}

std::optional<SessionRequest> ArrivalStream::next(double horizon) {
    const auto a = next_arrival(horizon);
    if (!a) {
        return std::nullopt;
    }
    return SessionRequest{a->class_id, a->time, holding_time(*a), a->kind};
}

std::vector<SessionRequest> merged_arrival_stream(const WorkloadSpec& spec, double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("horizon must be positive and finite");
    }
    ArrivalStream stream(spec, spec.seed);
    std::vector<SessionRequest> out;
    out.reserve(static_cast<std::size_t>(spec.total_rate() * horizon * 1.05) + 16);
    while (auto req = stream.next(horizon)) {
        out.push_back(*req);
    }
    return out;
}

}  // namespace vodsim::traffic
