#include <cmath>

#include "doctest.h"
#include "vodsim/errors.hpp"
#include "vodsim/scenario.hpp"

using namespace vodsim;
using namespace vodsim::scenario;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

ScenarioConfig tiny() {
    return parse_config(
        "num_clusters = 2\n"
        "min_rate = 1\n"
        "max_rate = 2\n"
        "num_partitions = 2\n"
        "ports_per_partition = 3\n"
        "min_hold = 1\n"
        "max_hold = 4\n"
        "horizon = 200\n"
        "replications = 1\n"
        "seed = 11\n");
}

}  // namespace

TEST_CASE("empty config reproduces the reference parameter table") {
    const auto c = parse_config("");
    CHECK(c.num_clusters == 30);
    CHECK(c.min_rate == 1.0);
    CHECK(c.max_rate == 15.5);
    CHECK(c.min_hold == 1.0);
    CHECK(c.max_hold == 200.0);
    CHECK(c.num_partitions == 30);
    CHECK(c.horizon == 500.0);
    CHECK(c.warmup == 50.0);
    CHECK(c.ports_per_partition == 10);
    CHECK(c.per_stream_bandwidth == 0.5);
    CHECK(c.interactive_rate == 0.0);
    CHECK(c.replications == 20);
    CHECK(c.threshold == 0.05);
    CHECK(c.strategy == StrategySelection::both);
    CHECK(c.policy_preset == PolicyPreset::uniform);
    CHECK(c.weight_scaling == engine::WeightScaling::literal);
    CHECK(c.sweep_mode == SweepMode::global_load);
    CHECK(c == ScenarioConfig{});
    CHECK(parse_config("# only a comment\n\n   \n") == ScenarioConfig{});
}

TEST_CASE("the 5 Mb/s, 30 s variant is reachable by configuration") {
    const auto c = parse_config("max_rate = 5.0\nmax_hold = 30\n");
    CHECK(c.max_rate == 5.0);
    CHECK(c.max_hold == 30.0);
    const auto w = c.workload();
    CHECK(w.clusters.back().traffic_rate == 5.0);
    for (const auto& cl : w.clusters) {
        CHECK(cl.mean_holding <= 30.0);
    }
}

TEST_CASE("config errors name the offending line") {
    CHECK(error_of("\nmin_hold = 300\n").find("line 2") != std::string::npos);
    CHECK(error_of("min_hold = 300").find("min_hold") != std::string::npos);
    CHECK(error_of("horizon = 10\nbogus = 1\n").find("line 2: unknown key 'bogus'") !=
          std::string::npos);
    CHECK(error_of("horizon = ten\n").find("line 1") != std::string::npos);
    CHECK(error_of("horizon\n").find("line 1") != std::string::npos);
    CHECK(error_of("seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
    CHECK(error_of("strategy = sometimes\n").find("uncontrolled|policy|both") != std::string::npos);
    CHECK(error_of("replications = 0\n").find("line 1") != std::string::npos);
    CHECK(error_of("warmup = 600\n").find("line 1") != std::string::npos);
    CHECK(error_of("num_clusters = 3\nweights = 0.5, 0.5\n").find("line 2") != std::string::npos);
    CHECK(error_of("num_clusters = 2\nweights = 0.6, 0.6\n").find("sum to 1") != std::string::npos);
    CHECK(error_of("max_rate = inf\n").find("line 1") != std::string::npos);
}

TEST_CASE("config parsing details") {
    const auto c = parse_config(
        "horizon = 1000   # seconds\n"
        "seed=18446744073709551615\n"
        "num_clusters = 3\n"
        "weights = 0.5, 0.25,0.25\n"
        "weight_scaling = max_normalized\n"
        "sweep_mode = per_cluster\n");
    CHECK(c.horizon == 1000.0);
    CHECK(c.warmup == 100.0);
    CHECK(c.seed == 18446744073709551615ULL);
    CHECK(c.policy_preset == PolicyPreset::explicit_weights);
    CHECK(c.weights == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(c.sweep_mode == SweepMode::per_cluster);
    const auto p = c.policy_strategy();
    CHECK(engine::effective_gate(*p.weights, 1, p.scaling) == 0.5);
}

TEST_CASE("capacity-proportional preset weights classes by home-partition capacity") {
    const auto c = parse_config("policy_preset = capacity_proportional\n");
    const auto s = c.policy_strategy();
    REQUIRE(s.weights);
    CHECK(s.weights->size() == 30);
    CHECK((*s.weights)[7] == doctest::Approx(1.0 / 30.0));
}

TEST_CASE("strategy selection") {
    CHECK(parse_config("strategy = uncontrolled").strategies().size() == 1);
    CHECK(parse_config("strategy = policy").strategies().front().mode == engine::StrategyMode::policy);
    const auto both = parse_config("").strategies();
    REQUIRE(both.size() == 2);
    CHECK(both[0].name() == "uncontrolled");
    CHECK(both[1].name() == "policy");
}

TEST_CASE("replication seeds are a pure function of their indices") {
    CHECK(replication_seed(5, 0, 0) == 5);
    CHECK(replication_seed(5, 2, 3) == 5 + 2 * 10007 + 3);
}

TEST_CASE("run_sweep yields one point per rate and strategy") {
    const auto points = run_sweep(tiny());
    REQUIRE(points.size() == 4);
    CHECK(points[0].traffic_rate == 1.0);
    CHECK(points[2].traffic_rate == 2.0);
    CHECK(points[0].strategy == "uncontrolled");
    CHECK(points[1].strategy == "policy");
    CHECK(points[2].offered_erlangs == doctest::Approx(2.0 * points[0].offered_erlangs));
    for (const auto& p : points) {
        CHECK(p.replications.size() == 1);
        for (const auto& r : p.replications) {
            CHECK(r.total().conserved());
        }
    }
}

TEST_CASE("run_sweep is deterministic and independent of the thread count") {
    auto config = tiny();
    config.replications = 3;
    const auto once = metrics::to_csv(run_sweep(config));
    CHECK(once == metrics::to_csv(run_sweep(config)));
    config.threads = 3;
    CHECK(once == metrics::to_csv(run_sweep(config)));
}

TEST_CASE("per_cluster sweep mode reports each class at fixed load") {
    auto config = tiny();
    config.sweep_mode = SweepMode::per_cluster;
    config.strategy = StrategySelection::uncontrolled;
    const auto points = run_sweep(config);
    REQUIRE(points.size() == 2);
    const auto w = config.workload();
    CHECK(points[1].traffic_rate == 2.0);
    CHECK(points[1].offered_erlangs ==
          doctest::Approx(w.clusters[1].request_rate * w.clusters[1].mean_holding));
    CHECK(points[0].replications.front() == points[1].replications.front());
}

TEST_CASE("run_base_point matches the first sweep point") {
    const auto config = tiny();
    const auto base = run_base_point(config);
    const auto sweep = run_sweep(config);
    REQUIRE(base.size() == 2);
    CHECK(base[0].replications == sweep[0].replications);
    CHECK(base[1].replications == sweep[1].replications);
}

TEST_CASE("compare_analytic at two Erlangs on two ports") {
    const auto config = parse_config(
        "num_clusters = 1\nmin_rate = 1\nmax_rate = 1\nper_stream_bandwidth = 0.5\n"
        "min_hold = 1\nmax_hold = 1\nnum_partitions = 1\nports_per_partition = 2\n"
        "replications = 5\n");
    const auto r = compare_analytic(config, 0.02);
    CHECK(r.offered_erlangs == 2.0);
    CHECK(r.analytic_blocking == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r.abs_difference < 0.02);
    CHECK(r.pass);
}

TEST_CASE("compare_analytic edge cases") {
    const auto zero = parse_config(
        "num_clusters = 1\nmin_rate = 0\nmax_rate = 0\nnum_partitions = 1\nreplications = 2\n"
        "analytic_horizon = 100\n");
    const auto z = compare_analytic(zero, 0.01);
    CHECK(z.analytic_blocking == 0.0);
    CHECK(z.simulated_blocking == 0.0);
    CHECK(z.pass);

    const auto no_ports = parse_config(
        "num_clusters = 1\nnum_partitions = 1\nports_per_partition = 0\nreplications = 2\n"
        "analytic_horizon = 50\n");
    const auto n = compare_analytic(no_ports, 0.01);
    CHECK(n.analytic_blocking == 1.0);
    CHECK(n.simulated_blocking == 1.0);

    CHECK_THROWS_AS(compare_analytic(parse_config(""), 0.02), InvalidArgument);
}
