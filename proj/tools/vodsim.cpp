// vodsim: sweep, single-point and analytic-comparison runs of the
// partitioned video server simulator.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vodsim/errors.hpp"
#include "vodsim/metrics.hpp"
#include "vodsim/scenario.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsageOrIo = 1,
    kConfigError = 2,
    kInternalError = 3,
    kToleranceExceeded = 4,
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

vodsim::scenario::ScenarioConfig load_config(const std::string& path) {
    if (path.empty()) {
        return vodsim::scenario::parse_config("");
    }
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return vodsim::scenario::parse_config(text.str());
    } catch (const vodsim::ConfigError& e) {
        throw vodsim::ConfigError(path + ": " + e.what());
    }
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << contents) || !out.flush()) {
        throw IoError("cannot write '" + path + "'");
    }
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) {
        return "n/a";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

void print_summary(const std::vector<vodsim::metrics::SweepPoint>& points, double threshold) {
    std::printf("%10s %12s %-14s %4s %22s %10s %10s  %s\n", "rate_mbps", "erlangs", "strategy",
                "reps", "server_blocking", "denial", "policed", "threshold");
    for (const auto& p : points) {
        char server[48];
        std::snprintf(server, sizeof server, "%s +- %.4f", fmt_opt(p.server.mean).c_str(),
                      p.server.ci95_halfwidth);
        const char* verdict =
            !p.server.mean ? "n/a" : (*p.server.mean <= threshold ? "below" : "above");
        std::printf("%10.3f %12.2f %-14s %4zu %22s %10s %10s  %s\n", p.traffic_rate,
                    p.offered_erlangs, p.strategy.c_str(), p.replications.size(), server,
                    fmt_opt(p.total_denial.mean).c_str(), fmt_opt(p.mean_policed_fraction).c_str(),
                    verdict);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partitioned video-on-demand server blocking simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    double tolerance = 0.02;

    auto* run_cmd = app.add_subcommand("run", "Simulate the base load point and print a summary");
    run_cmd->add_option("--config", config_path, "Scenario file (key = value lines)");
    run_cmd->add_option("--seed", seed, "Override the base seed");
    run_cmd->add_option("--strategy", strategy, "uncontrolled | policy | both")
        ->check(CLI::IsMember({"uncontrolled", "policy", "both"}));
    run_cmd->add_option("--out", out_path, "Write the result rows as CSV");

    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep every cluster rate and write CSV");
    sweep_cmd->add_option("--config", config_path, "Scenario file (key = value lines)");
    sweep_cmd->add_option("--out", out_path, "CSV output path")->required();

    auto* cmp_cmd = app.add_subcommand("compare-analytic",
                                       "Compare single-partition blocking with Erlang-B");
    cmp_cmd->add_option("--config", config_path, "Scenario file (key = value lines)");
    cmp_cmd->add_option("--tolerance", tolerance, "Maximum absolute difference")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageOrIo;
    }

    using namespace vodsim;
    try {
        scenario::ScenarioConfig config = load_config(config_path);

        if (*run_cmd) {
            if (seed) {
                config.seed = *seed;
            }
            if (strategy == "uncontrolled") {
                config.strategy = scenario::StrategySelection::uncontrolled;
            } else if (strategy == "policy") {
                config.strategy = scenario::StrategySelection::policy;
            } else if (strategy == "both") {
                config.strategy = scenario::StrategySelection::both;
            }
            const auto points = scenario::run_base_point(config);
            print_summary(points, config.threshold);
            if (!out_path.empty()) {
                write_file(out_path, metrics::to_csv(points));
            }
        } else if (*sweep_cmd) {
            const auto points = scenario::run_sweep(config);
            write_file(out_path, metrics::to_csv(points));
            print_summary(points, config.threshold);
        } else if (*cmp_cmd) {
            const auto r = scenario::compare_analytic(config, tolerance);
            std::printf("offered_erlangs    %.6f\n", r.offered_erlangs);
            std::printf("ports              %u\n", r.ports);
            std::printf("erlang_b           %.6f\n", r.analytic_blocking);
            std::printf("simulated          %.6f +- %.6f\n", r.simulated_blocking,
                        r.ci95_halfwidth);
            std::printf("abs_difference     %.6f\n", r.abs_difference);
            std::printf("tolerance          %.6f\n", r.tolerance);
            std::printf("result             %s\n", r.pass ? "PASS" : "FAIL");
            return r.pass ? kOk : kToleranceExceeded;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfigError;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageOrIo;
    }
    return kOk;
}
