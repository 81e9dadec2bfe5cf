#pragma once

// Closed-form blocking and admission probabilities for a partitioned
// loss system. Everything here is a pure function of its arguments.

#include <cstdint>
#include <span>
#include <vector>

namespace vodsim::analytic {

/// Offered traffic in Erlangs (arrival rate times mean holding time).
class OfferedLoad {
public:
    explicit OfferedLoad(double erlangs);
    double erlangs() const noexcept { return erlangs_; }

private:
    double erlangs_;
};

/// Number of ports in one server partition.
struct PartitionSpec {
    std::uint32_t capacity = 0;
};

/// One link of an overflow chain: the load offered to a partition.
struct ChainStage {
    OfferedLoad load;
    PartitionSpec partition;
};

using ChainSpec = std::vector<ChainStage>;

/// Per-class admission probabilities; entries lie in [0,1] and sum to 1.
class PolicyWeights {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit PolicyWeights(std::vector<double> weights);

    /// Equal weight 1/n for each of n classes.
    static PolicyWeights uniform(std::size_t classes);
    /// Weights proportional to the given non-negative scores.
    static PolicyWeights proportional(std::span<const double> scores);

    std::span<const double> values() const noexcept { return weights_; }
    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_.at(i); }
    double max() const noexcept;

private:
    std::vector<double> weights_;
};

/// Erlang-B blocking probability via the recurrence
/// B(E,0) = 1, B(E,C) = E B(E,C-1) / (C + E B(E,C-1)).
double erlang_b(OfferedLoad load, PartitionSpec partition);

/// Erlang-B evaluated literally as (E^C/C!) / sum_{k<=C} E^k/k!.
/// Only valid up to kDirectCapacityLimit ports; kept as a test oracle.
inline constexpr std::uint32_t kDirectCapacityLimit = 170;
double erlang_b_direct(OfferedLoad load, PartitionSpec partition);

/// Probability that every partition of the chain is blocked, assuming the
/// stages block independently. The empty chain yields 1.
double chain_blocking(std::span<const ChainStage> chain);

/// Probability that a request is served by partition `j` (1-based) of `k`
/// after skipping j-1 partitions, given `occupied` busy ports there:
/// (1 - 1/k)^(j-1) * (1/k) * (C_j - Q_j) / C_j.
double free_port_selection_prob(std::uint32_t k, std::uint32_t j, PartitionSpec partition,
                                std::uint32_t occupied);

/// Admission probability after a class gate: weight * base.
double policy_admission_prob(double weight, double base);

/// Density of the sum of k iid Exponential(rate) variables.
double erlang_k_pdf(std::uint32_t k, double rate, double t);

/// Distribution function matching erlang_k_pdf:
/// 1 - exp(-rate t) sum_{n<k} (rate t)^n / n!.
double erlang_k_cdf(std::uint32_t k, double rate, double t);

}  // namespace vodsim::analytic
