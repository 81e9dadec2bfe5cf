#include "vodsim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vodsim/errors.hpp"

namespace vodsim::analytic {
namespace {

void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
    }
}

// Results are never clamped; an out-of-range value means a formula bug.
double checked_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InternalError(std::string(what) + " produced out-of-range probability " +
                            std::to_string(p));
    }
    return p;
}

}  // namespace

OfferedLoad::OfferedLoad(double erlangs) : erlangs_(erlangs) {
    if (!std::isfinite(erlangs) || erlangs < 0.0) {
        throw InvalidArgument("offered load must be finite and non-negative, got " +
                              std::to_string(erlangs));
    }
}

PolicyWeights::PolicyWeights(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw InvalidArgument("policy weights must name at least one class");
    }
    for (double w : weights_) {
        require_probability(w, "policy weight");
    }
    const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw InvalidArgument("policy weights must sum to 1, got " + std::to_string(sum));
    }
}

PolicyWeights PolicyWeights::uniform(std::size_t classes) {
    if (classes == 0) {
        throw InvalidArgument("uniform weights need at least one class");
    }
    return PolicyWeights(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

PolicyWeights PolicyWeights::proportional(std::span<const double> scores) {
    double total = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) {
            throw InvalidArgument("proportional weight scores must be finite and non-negative");
        }
        total += s;
    }
    if (!(total > 0.0)) {
        throw InvalidArgument("proportional weight scores must not all be zero");
    }
    std::vector<double> w;
    w.reserve(scores.size());
    for (double s : scores) {
        w.push_back(s / total);
    }
    return PolicyWeights(std::move(w));
}

double PolicyWeights::max() const noexcept {
    return *std::max_element(weights_.begin(), weights_.end());
}

double erlang_b(OfferedLoad load, PartitionSpec partition) {
    const double e = load.erlangs();
    double b = 1.0;
    for (std::uint32_t c = 1; c <= partition.capacity; ++c) {
        b = e * b / (static_cast<double>(c) + e * b);
    }
    return checked_probability(b, "erlang_b");
}

double erlang_b_direct(OfferedLoad load, PartitionSpec partition) {
    if (partition.capacity > kDirectCapacityLimit) {
        throw InvalidArgument("erlang_b_direct overflows above " +
                              std::to_string(kDirectCapacityLimit) +
                              " ports; use the recurrence form erlang_b instead");
    }
    const double e = load.erlangs();
    double factorial = 1.0;
    double denominator = 0.0;
    double numerator = 1.0;
    for (std::uint32_t k = 0; k <= partition.capacity; ++k) {
        if (k > 0) {
            factorial *= static_cast<double>(k);
        }
        const double term = std::pow(e, static_cast<double>(k)) / factorial;
        denominator += term;
        numerator = term;
    }
    return checked_probability(numerator / denominator, "erlang_b_direct");
}

double chain_blocking(std::span<const ChainStage> chain) {
    double product = 1.0;
    for (const auto& stage : chain) {
        product *= erlang_b(stage.load, stage.partition);
    }
    return checked_probability(product, "chain_blocking");
}

double free_port_selection_prob(std::uint32_t k, std::uint32_t j, PartitionSpec partition,
                                std::uint32_t occupied) {
    if (k == 0) {
        throw InvalidArgument("partition count k must be positive");
    }
    if (j == 0 || j > k) {
        throw InvalidArgument("partition index j must lie in [1, k]");
    }
    if (partition.capacity == 0) {
        throw InvalidArgument("partition capacity must be positive (formula divides by C_j)");
    }
    if (occupied > partition.capacity) {
        throw InvalidArgument("occupied ports exceed partition capacity");
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    const double skip = std::pow(1.0 - inv_k, static_cast<double>(j - 1));
    const double free_fraction = static_cast<double>(partition.capacity - occupied) /
                                 static_cast<double>(partition.capacity);
    return checked_probability(skip * inv_k * free_fraction, "free_port_selection_prob");
}

double policy_admission_prob(double weight, double base) {
    require_probability(weight, "weight");
    require_probability(base, "base probability");
    return checked_probability(weight * base, "policy_admission_prob");
}

double erlang_k_pdf(std::uint32_t k, double rate, double t) {
    if (k == 0) {
        throw InvalidArgument("Erlang shape k must be positive");
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidArgument("Erlang rate must be positive and finite");
    }
    if (!(t >= 0.0)) {
        throw InvalidArgument("Erlang density is defined for t >= 0");
    }
    if (t == 0.0) {
        return k == 1 ? rate : 0.0;
    }
    const double kd = static_cast<double>(k);
    const double log_density =
        kd * std::log(rate) + (kd - 1.0) * std::log(t) - rate * t - std::lgamma(kd);
    return std::exp(log_density);
}

double erlang_k_cdf(std::uint32_t k, double rate, double t) {
    if (k == 0) {
        throw InvalidArgument("Erlang shape k must be positive");
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidArgument("Erlang rate must be positive and finite");
    }
    if (!(t > 0.0)) {
        return 0.0;
    }
    const double x = rate * t;
    double term = 1.0;
    double tail = 1.0;
    for (std::uint32_t n = 1; n < k; ++n) {
        term *= x / static_cast<double>(n);
        tail += term;
    }
    return std::clamp(1.0 - std::exp(-x) * tail, 0.0, 1.0);
}

}  // namespace vodsim::analytic
