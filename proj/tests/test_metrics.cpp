#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "vodsim/errors.hpp"
#include "vodsim/metrics.hpp"

using namespace vodsim;
using namespace vodsim::metrics;

namespace {

RunMetrics single(std::uint64_t offered, std::uint64_t admitted, std::uint64_t policed,
                  std::uint64_t blocked, std::uint64_t seed = 0) {
    return RunMetrics({ClassCounts{offered, admitted, policed, blocked}}, 500.0, 50.0, seed);
}

RunMetrics with_server_blocking(double b) {
    const auto blocked = static_cast<std::uint64_t>(std::llround(b * 1000));
    return single(1000, 1000 - blocked, 0, blocked);
}

bool same_to_12_digits(double a, double b) {
    if (a == b) {
        return true;
    }
    return std::abs(a - b) <= 5e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("RunMetrics validates conservation on construction") {
    CHECK_NOTHROW(single(10, 5, 3, 2));
    CHECK_THROWS_AS(single(10, 5, 3, 3), InternalError);
    const RunMetrics m({ClassCounts{4, 4, 0, 0}, ClassCounts{6, 1, 2, 3}}, 10.0, 1.0, 7);
    CHECK(m.total() == ClassCounts{10, 5, 2, 3});
    CHECK(m.per_class().size() == 2);
    CHECK(m.seed() == 7);
}

TEST_CASE("blocking_probability scopes") {
    const auto none = single(100, 100, 0, 0);
    CHECK(*blocking_probability(none, BlockingScope::server) == 0.0);
    CHECK(*blocking_probability(none, BlockingScope::total_denial) == 0.0);

    const auto forty = single(100, 60, 0, 40);
    CHECK(*blocking_probability(forty, BlockingScope::server) == doctest::Approx(0.4));
    CHECK(*blocking_probability(forty, BlockingScope::total_denial) == doctest::Approx(0.4));

    const auto gated = single(100, 40, 50, 10);
    CHECK(*blocking_probability(gated, BlockingScope::server) == doctest::Approx(0.2));
    CHECK(*blocking_probability(gated, BlockingScope::total_denial) == doctest::Approx(0.6));
}

TEST_CASE("blocking_probability is absent, not zero, for empty denominators") {
    CHECK_FALSE(blocking_probability(single(0, 0, 0, 0), BlockingScope::server).has_value());
    CHECK_FALSE(blocking_probability(single(0, 0, 0, 0), BlockingScope::total_denial).has_value());
    const auto all_policed = single(20, 0, 20, 0);
    CHECK_FALSE(blocking_probability(all_policed, BlockingScope::server).has_value());
    CHECK(*blocking_probability(all_policed, BlockingScope::total_denial) == 1.0);
}

TEST_CASE("aggregate mean and confidence half-width") {
    const std::vector<RunMetrics> same{with_server_blocking(0.3), with_server_blocking(0.3)};
    const auto flat = aggregate(same, BlockingScope::server);
    CHECK(*flat.mean == doctest::Approx(0.3));
    CHECK(flat.ci95_halfwidth == 0.0);

    const std::vector<RunMetrics> one{with_server_blocking(0.25)};
    const auto lone = aggregate(one, BlockingScope::server);
    CHECK(*lone.mean == doctest::Approx(0.25));
    CHECK(lone.ci95_halfwidth == 0.0);
    CHECK(lone.degenerate());

    const std::vector<RunMetrics> pair{with_server_blocking(0.3), with_server_blocking(0.5)};
    const auto two = aggregate(pair, BlockingScope::server);
    CHECK(*two.mean == doctest::Approx(0.4));
    // s = sqrt(((0.1)^2 + (0.1)^2) / 1) = 0.141421..., half-width = 1.96 s / sqrt(2) = 0.196
    CHECK(two.ci95_halfwidth == doctest::Approx(1.96 * std::sqrt(0.02) / std::sqrt(2.0)));
    CHECK(two.ci95_halfwidth == doctest::Approx(0.196));

    CHECK_THROWS_AS(aggregate(std::span<const RunMetrics>{}, BlockingScope::server), InvalidArgument);
}

TEST_CASE("aggregate skips undefined replications") {
    const std::vector<RunMetrics> mixed{single(0, 0, 0, 0), with_server_blocking(0.2)};
    const auto e = aggregate(mixed, BlockingScope::server);
    CHECK(e.samples == 1);
    CHECK(*e.mean == doctest::Approx(0.2));
    const std::vector<RunMetrics> empty_runs{single(0, 0, 0, 0)};
    CHECK_FALSE(aggregate(empty_runs, BlockingScope::server).mean.has_value());
}

TEST_CASE("aggregate is permutation invariant") {
    std::mt19937_64 gen(123);
    std::uniform_int_distribution<std::uint64_t> count(1, 5000);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RunMetrics> reps;
        for (int i = 0; i < 13; ++i) {
            const auto offered = count(gen) + 10;
            const auto blocked = count(gen) % offered;
            const auto policed = count(gen) % (offered - blocked);
            reps.push_back(single(offered, offered - blocked - policed, policed, blocked));
        }
        const auto base = aggregate(reps, BlockingScope::server);
        std::shuffle(reps.begin(), reps.end(), gen);
        const auto shuffled = aggregate(reps, BlockingScope::server);
        CHECK(*base.mean == *shuffled.mean);
        CHECK(base.ci95_halfwidth == shuffled.ci95_halfwidth);
    }
}

TEST_CASE("make_sweep_point with a class filter uses that class only") {
    const RunMetrics r({ClassCounts{10, 10, 0, 0}, ClassCounts{10, 5, 0, 5}}, 1.0, 0.0, 0);
    const auto all = make_sweep_point(1.0, 2.0, "uncontrolled", {r});
    CHECK(*all.server.mean == doctest::Approx(0.25));
    const auto second = make_sweep_point(1.0, 2.0, "uncontrolled", {r}, 1);
    CHECK(*second.server.mean == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_sweep_point(1.0, 2.0, "x", {r}, 2), InvalidArgument);
}

TEST_CASE("to_csv layout") {
    CHECK(to_csv({}) == std::string(kCsvHeader) + "\n");

    const std::vector<SweepPoint> one{
        make_sweep_point(1.5, 12.25, "uncontrolled", {single(100, 60, 0, 40)})};
    const auto text = to_csv(one);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text == std::string(kCsvHeader) + "\n1.5,12.25,uncontrolled,1,0.4,0,0.4,0,0\n");

    const std::vector<SweepPoint> gated{
        make_sweep_point(2.0, 3.0, "policy", {single(20, 0, 20, 0)})};
    CHECK(to_csv(gated) == std::string(kCsvHeader) + "\n2,3,policy,1,,0,1,0,1\n");
}

TEST_CASE("to_csv orders rows by rate then strategy and is deterministic") {
    std::vector<SweepPoint> points;
    points.push_back(make_sweep_point(2.0, 4.0, "uncontrolled", {with_server_blocking(0.5)}));
    points.push_back(make_sweep_point(1.0, 2.0, "uncontrolled", {with_server_blocking(0.2)}));
    points.push_back(make_sweep_point(2.0, 4.0, "policy", {with_server_blocking(0.3)}));
    points.push_back(make_sweep_point(1.0, 2.0, "policy", {with_server_blocking(0.1)}));
    const auto rows = parse_csv(to_csv(points));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].traffic_rate_mbps == 1.0);
    CHECK(rows[0].strategy == "policy");
    CHECK(rows[1].strategy == "uncontrolled");
    CHECK(rows[2].traffic_rate_mbps == 2.0);
    CHECK(rows[3].strategy == "uncontrolled");
    CHECK(to_csv(points) == to_csv(points));
}

TEST_CASE("parse_csv inverts to_csv to 12 significant digits") {
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> rate(0.001, 1000.0);
    std::uniform_int_distribution<std::uint64_t> count(1, 100000);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SweepPoint> points;
        for (int p = 0; p < 5; ++p) {
            std::vector<RunMetrics> reps;
            for (int r = 0; r < 3; ++r) {
                const auto offered = count(gen) + 3;
                const auto policed = count(gen) % offered;
                const auto blocked = count(gen) % (offered - policed);
                reps.push_back(single(offered, offered - policed - blocked, policed, blocked));
            }
            points.push_back(make_sweep_point(rate(gen), rate(gen) * 37.0,
                                              p % 2 ? "policy" : "uncontrolled", reps));
        }
        const auto rows = parse_csv(to_csv(points));
        REQUIRE(rows.size() == points.size());
        for (const auto& row : rows) {
            const auto it = std::find_if(points.begin(), points.end(), [&](const SweepPoint& p) {
                return same_to_12_digits(p.traffic_rate, row.traffic_rate_mbps) &&
                       p.strategy == row.strategy;
            });
            REQUIRE(it != points.end());
            CHECK(same_to_12_digits(it->offered_erlangs, row.offered_erlangs));
            CHECK(row.replications == it->replications.size());
            CHECK(same_to_12_digits(*it->server.mean, *row.mean_server_blocking));
            CHECK(same_to_12_digits(it->server.ci95_halfwidth, row.ci95_server));
            CHECK(same_to_12_digits(*it->total_denial.mean, *row.mean_total_denial));
            CHECK(same_to_12_digits(it->total_denial.ci95_halfwidth, row.ci95_total));
            CHECK(same_to_12_digits(*it->mean_policed_fraction, *row.mean_policed_fraction));
        }
    }
}

TEST_CASE("parse_csv rejects malformed documents") {
    CHECK_THROWS_AS(parse_csv("nope\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n1,2,x\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n1,2,x,one,0,0,0,0,0\n"), InvalidArgument);
}

TEST_CASE("format_number keeps at most 12 significant digits") {
    CHECK(format_number(0.4) == "0.4");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(15.5) == "15.5");
    CHECK(format_number(49500.0) == "49500");
}
