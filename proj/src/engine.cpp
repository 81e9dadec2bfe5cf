#include "vodsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vodsim/errors.hpp"

namespace vodsim::engine {

ClusterState::ClusterState(std::vector<std::uint32_t> capacities)
    : capacities_(std::move(capacities)), occupied_(capacities_.size(), 0) {
    if (capacities_.empty()) {
        throw InvalidArgument("the server needs at least one partition");
    }
    free_ports_ = std::accumulate(capacities_.begin(), capacities_.end(), std::uint64_t{0});
}

std::uint64_t ClusterState::busy_ports() const noexcept {
    return std::accumulate(occupied_.begin(), occupied_.end(), std::uint64_t{0});
}

void ClusterState::occupy(std::size_t j) {
    if (!has_free_port(j)) {
        throw InternalError("partition " + std::to_string(j) + " has no free port to occupy");
    }
    ++occupied_[j];
    --free_ports_;
}

void ClusterState::release(std::size_t j) {
    if (occupied_.at(j) == 0) {
        throw InternalError("release on idle partition " + std::to_string(j));
    }
    --occupied_[j];
    ++free_ports_;
}

void ClusterState::check_invariants() const {
    std::uint64_t free = 0;
    for (std::size_t j = 0; j < capacities_.size(); ++j) {
        if (occupied_[j] > capacities_[j]) {
            throw InternalError("partition " + std::to_string(j) + " is over capacity");
        }
        free += capacities_[j] - occupied_[j];
    }
    if (free != free_ports_) {
        throw InternalError("free-port tally out of sync with partition occupancy");
    }
}

StrategySpec StrategySpec::uncontrolled() { return {}; }

StrategySpec StrategySpec::policy(PolicyWeights weights, WeightScaling scaling,
                                  std::string label) {
    StrategySpec s;
    s.mode = StrategyMode::policy;
    s.weights = std::move(weights);
    s.scaling = scaling;
    s.label = std::move(label);
    return s;
}

void StrategySpec::validate() const {
    if (mode == StrategyMode::policy && !weights) {
        throw ConfigError("policy strategy requires per-class weights");
    }
    if (mode == StrategyMode::uncontrolled && weights) {
        throw ConfigError("uncontrolled strategy must not carry weights");
    }
    if (label.find_first_of(",\n\r") != std::string::npos) {
        throw ConfigError("strategy label must not contain commas or line breaks");
    }
}

std::string StrategySpec::name() const {
    if (!label.empty()) {
        return label;
    }
    return mode == StrategyMode::policy ? "policy" : "uncontrolled";
}

double effective_gate(const PolicyWeights& weights, std::size_t class_id, WeightScaling scaling) {
    if (class_id >= weights.size()) {
        throw InvalidArgument("class " + std::to_string(class_id) + " has no policy weight (" +
                              std::to_string(weights.size()) + " weights given)");
    }
    const double w = weights[class_id];
    switch (scaling) {
        case WeightScaling::literal:
            return w;
        case WeightScaling::max_normalized:
            return w / weights.max();
    }
    return w;
}

AdmissionController::AdmissionController(const StrategySpec& strategy, std::size_t classes) {
    strategy.validate();
    if (strategy.mode == StrategyMode::policy) {
        gated_ = true;
        gates_.reserve(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            gates_.push_back(effective_gate(*strategy.weights, c, strategy.scaling));
        }
    }
}

void AdmissionController::throw_unknown_class(int class_id) {
    if (class_id < 0) {
        throw InvalidArgument("request class id must be non-negative");
    }
    throw InvalidArgument("class " + std::to_string(class_id) + " has no policy weight");
}

AdmissionOutcome AdmissionController::probe(ClusterState& state, std::size_t cls) {
    const std::size_t k = state.partitions();
    const std::size_t home = cls % k;
    for (std::size_t step = 0; step < k; ++step) {
        const std::size_t j = home + step < k ? home + step : home + step - k;
        if (state.has_free_port(j)) {
            state.occupy(j);
            return AdmissionOutcome::admitted(j);
        }
    }
    throw InternalError("free-port tally is positive but every partition is full");
}

AdmissionOutcome admit(ClusterState& state, const SessionRequest& request,
                       const StrategySpec& strategy, Rng& gate_rng) {
    const std::size_t classes =
        strategy.weights ? strategy.weights->size() : static_cast<std::size_t>(request.class_id) + 1;
    return AdmissionController(strategy, classes).admit(state, request, gate_rng);
}

void release(ClusterState& state, std::size_t partition) { state.release(partition); }

bool EventQueue::later(const Event& a, const Event& b) {
    if (a.time != b.time) {
        return a.time > b.time;
    }
    if (a.is_departure() != b.is_departure()) {
        return b.is_departure();
    }
    return a.sequence > b.sequence;
}

void EventQueue::push(double time, std::variant<SessionRequest, Departure> payload) {
    heap_.push_back(Event{time, std::move(payload), next_sequence_++});
    std::push_heap(heap_.begin(), heap_.end(), later);
}

const Event& EventQueue::top() const {
    if (heap_.empty()) {
        throw InternalError("top() on an empty event queue");
    }
    return heap_.front();
}

Event EventQueue::pop() {
    if (heap_.empty()) {
        throw InternalError("pop() on an empty event queue");
    }
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Event e = std::move(heap_.back());
    heap_.pop_back();
    return e;
}

metrics::RunMetrics run(const traffic::WorkloadSpec& workload,
                        std::span<const std::uint32_t> capacities, const StrategySpec& strategy,
                        const RunConfig& config) {
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
        throw ConfigError("horizon must be positive and finite");
    }
    if (!(config.warmup >= 0.0) || !(config.warmup < config.horizon)) {
        throw ConfigError("warmup must lie in [0, horizon)");
    }

    std::size_t classes = 0;
    for (const auto& c : workload.clusters) {
        classes = std::max(classes, static_cast<std::size_t>(c.class_id) + 1);
    }

    ClusterState state(std::vector<std::uint32_t>(capacities.begin(), capacities.end()));
    const AdmissionController controller(strategy, classes);
    traffic::ArrivalStream arrivals(workload, config.seed);
    Rng gate_rng(derive_seed(config.seed, 0xA11CE5ULL << 20));
    EventQueue departures;

    std::vector<metrics::ClassCounts> counts(classes);
    std::uint64_t admitted_all = 0;
    std::uint64_t departed_all = 0;

    auto depart_until = [&](double t, bool inclusive) {
        while (inclusive ? departures.next_time() <= t : departures.next_time() < t) {
            const Event e = departures.pop();
            state.release(std::get<Departure>(e.payload).partition);
            ++departed_all;
#ifndef NDEBUG
            state.check_invariants();
#endif
        }
    };

    while (const auto arrival = arrivals.next_arrival(config.horizon)) {
        // Departures at the same instant free their port first.
        depart_until(arrival->time, true);

        const AdmissionOutcome outcome = controller.admit(state, arrival->class_id, gate_rng);
        if (outcome.kind == AdmissionOutcome::Kind::admitted) {
            ++admitted_all;
            departures.push(arrival->time + arrivals.holding_time(*arrival),
                            Departure{outcome.partition, arrival->class_id});
        }
#ifndef NDEBUG
        state.check_invariants();
#endif

        if (arrival->time >= config.warmup) {
            auto& c = counts[static_cast<std::size_t>(arrival->class_id)];
            ++c.offered;
            switch (outcome.kind) {
                case AdmissionOutcome::Kind::admitted:
                    ++c.admitted;
                    break;
                case AdmissionOutcome::Kind::policed:
                    ++c.policed;
                    break;
                case AdmissionOutcome::Kind::blocked:
                    ++c.blocked;
                    break;
            }
        }
    }
    depart_until(config.horizon, false);

    state.check_invariants();
    if (state.busy_ports() != admitted_all - departed_all) {
        throw InternalError("final occupancy differs from admissions minus departures");
    }
    return metrics::RunMetrics(std::move(counts), config.horizon, config.warmup, config.seed);
}

}  // namespace vodsim::engine
