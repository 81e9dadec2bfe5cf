#pragma once

// Event-driven loss-system simulation of a partitioned server.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vodsim/analytic.hpp"
#include "vodsim/metrics.hpp"
#include "vodsim/random.hpp"
#include "vodsim/traffic.hpp"

namespace vodsim::engine {

using analytic::PolicyWeights;
using traffic::SessionRequest;

/// Port capacities and live occupancy of the k server partitions.
class ClusterState {
public:
    explicit ClusterState(std::vector<std::uint32_t> capacities);

    std::size_t partitions() const noexcept { return capacities_.size(); }
    std::uint32_t capacity(std::size_t j) const { return capacities_.at(j); }
    std::uint32_t occupied(std::size_t j) const { return occupied_.at(j); }
    std::span<const std::uint32_t> capacities() const noexcept { return capacities_; }
    std::span<const std::uint32_t> occupancy() const noexcept { return occupied_; }
    std::uint64_t free_ports() const noexcept { return free_ports_; }
    std::uint64_t busy_ports() const noexcept;

    bool has_free_port(std::size_t j) const { return occupied_.at(j) < capacities_.at(j); }

    /// Takes one port of partition j. Throws InternalError if it is full.
    void occupy(std::size_t j);
    /// Returns one port of partition j. Throws InternalError if it is idle.
    void release(std::size_t j);

    /// Throws InternalError unless 0 <= occupied[j] <= capacity[j] for all j
    /// and the free-port tally agrees.
    void check_invariants() const;

private:
    std::vector<std::uint32_t> capacities_;
    std::vector<std::uint32_t> occupied_;
    std::uint64_t free_ports_ = 0;
};

enum class StrategyMode { uncontrolled, policy };
enum class WeightScaling { literal, max_normalized };

struct StrategySpec {
    StrategyMode mode = StrategyMode::uncontrolled;
    std::optional<PolicyWeights> weights;
    WeightScaling scaling = WeightScaling::literal;
    /// Label used in reports; derived from mode when empty.
    std::string label;

    static StrategySpec uncontrolled();
    static StrategySpec policy(PolicyWeights weights, WeightScaling scaling,
                               std::string label = {});

    /// Throws ConfigError when weights are missing for policy mode or
    /// present for uncontrolled mode.
    void validate() const;
    std::string name() const;
};

/// Pass probability of the class gate. `literal` uses the weight as is;
/// `max_normalized` divides by the largest weight so the top class always
/// passes.
double effective_gate(const PolicyWeights& weights, std::size_t class_id, WeightScaling scaling);

struct AdmissionOutcome {
    enum class Kind { admitted, policed, blocked };
    Kind kind = Kind::blocked;
    std::size_t partition = 0;  // meaningful only when admitted

    static AdmissionOutcome admitted(std::size_t j) { return {Kind::admitted, j}; }
    static AdmissionOutcome policed() { return {Kind::policed, 0}; }
    static AdmissionOutcome blocked() { return {Kind::blocked, 0}; }

    friend bool operator==(const AdmissionOutcome&, const AdmissionOutcome&) = default;
};

/// Admission decisions for one strategy, with per-class gates precomputed.
class AdmissionController {
public:
    AdmissionController(const StrategySpec& strategy, std::size_t classes);

    /// Applies the class gate (policy mode only), then probes partitions
    /// cyclically from class_id mod k and takes a port in the first one
    /// with room.
    AdmissionOutcome admit(ClusterState& state, int class_id, Rng& gate_rng) const {
        const auto cls = static_cast<std::size_t>(class_id);
        if (gated_) {
            if (class_id < 0 || cls >= gates_.size()) {
                throw_unknown_class(class_id);
            }
            // Gates of exactly 0 or 1 are decided without a draw.
            const double gate = gates_[cls];
            if (gate < 1.0 && !(gate > 0.0 && gate_rng.bernoulli(gate))) {
                return AdmissionOutcome::policed();
            }
        } else if (class_id < 0) {
            throw_unknown_class(class_id);
        }
        if (state.free_ports() == 0) {
            return AdmissionOutcome::blocked();
        }
        return probe(state, cls);
    }
    AdmissionOutcome admit(ClusterState& state, const SessionRequest& request, Rng& gate_rng) const {
        return admit(state, request.class_id, gate_rng);
    }

private:
    [[noreturn]] static void throw_unknown_class(int class_id);
    static AdmissionOutcome probe(ClusterState& state, std::size_t cls);

    bool gated_ = false;
    std::vector<double> gates_;
};

/// One-shot form of AdmissionController::admit.
AdmissionOutcome admit(ClusterState& state, const SessionRequest& request,
                       const StrategySpec& strategy, Rng& gate_rng);

/// Session departure: frees one port of `partition`.
void release(ClusterState& state, std::size_t partition);

struct Departure {
    std::size_t partition = 0;
    int class_id = 0;
};

struct Event {
    double time = 0.0;
    std::variant<SessionRequest, Departure> payload;
    std::uint64_t sequence = 0;

    bool is_departure() const noexcept { return std::holds_alternative<Departure>(payload); }
};

/// Min-priority queue of events ordered by time, then departures before
/// arrivals, then insertion order.
class EventQueue {
public:
    void push(double time, std::variant<SessionRequest, Departure> payload);
    const Event& top() const;
    Event pop();
    /// Time of the earliest event, or +infinity when empty.
    double next_time() const noexcept {
        return heap_.empty() ? std::numeric_limits<double>::infinity() : heap_.front().time;
    }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }

private:
    static bool later(const Event& a, const Event& b);

    std::vector<Event> heap_;
    std::uint64_t next_sequence_ = 0;
};

struct RunConfig {
    double horizon = 500.0;
    double warmup = 50.0;
    std::uint64_t seed = 0;
};

/// Simulates the merged request stream against the partitions for
/// [0, horizon). Only requests arriving at or after `warmup` are counted.
/// Deterministic in (workload, capacities, strategy, config).
metrics::RunMetrics run(const traffic::WorkloadSpec& workload,
                        std::span<const std::uint32_t> capacities, const StrategySpec& strategy,
                        const RunConfig& config);

}  // namespace vodsim::engine
