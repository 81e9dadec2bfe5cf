#include "vodsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "vodsim/errors.hpp"

namespace vodsim::metrics {

ClassCounts& ClassCounts::operator+=(const ClassCounts& other) noexcept {
    offered += other.offered;
    admitted += other.admitted;
    policed += other.policed;
    blocked += other.blocked;
    return *this;
}

RunMetrics::RunMetrics(std::vector<ClassCounts> per_class, double horizon, double warmup,
                       std::uint64_t seed)
    : per_class_(std::move(per_class)), horizon_(horizon), warmup_(warmup), seed_(seed) {
    for (std::size_t c = 0; c < per_class_.size(); ++c) {
        if (!per_class_[c].conserved()) {
            throw InternalError("class " + std::to_string(c) +
                                " violates offered = admitted + policed + blocked");
        }
        total_ += per_class_[c];
    }
}

std::optional<double> blocking_probability(const ClassCounts& counts, BlockingScope scope) {
    switch (scope) {
        case BlockingScope::server: {
            const std::uint64_t reached = counts.offered - counts.policed;
            if (reached == 0) {
                return std::nullopt;
            }
            return static_cast<double>(counts.blocked) / static_cast<double>(reached);
        }
        case BlockingScope::total_denial:
            if (counts.offered == 0) {
                return std::nullopt;
            }
            return static_cast<double>(counts.blocked + counts.policed) /
                   static_cast<double>(counts.offered);
    }
    return std::nullopt;
}

std::optional<double> blocking_probability(const RunMetrics& m, BlockingScope scope) {
    return blocking_probability(m.total(), scope);
}

std::optional<double> policed_fraction(const ClassCounts& counts) {
    if (counts.offered == 0) {
        return std::nullopt;
    }
    return static_cast<double>(counts.policed) / static_cast<double>(counts.offered);
}

Estimate estimate(std::span<const std::optional<double>> samples) {
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples) {
        if (s) {
            values.push_back(*s);
        }
    }
    // Summation in sorted order keeps the result independent of input order.
    std::sort(values.begin(), values.end());

    Estimate out;
    out.samples = values.size();
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    out.mean = mean;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - mean) * (v - mean);
        }
        const double sd = std::sqrt(ss / (n - 1.0));
        out.ci95_halfwidth = 1.96 * sd / std::sqrt(n);
    }
    return out;
}

Estimate aggregate(std::span<const ClassCounts> replications, BlockingScope scope) {
    if (replications.empty()) {
        throw InvalidArgument("aggregate needs at least one replication");
    }
    std::vector<std::optional<double>> samples;
    samples.reserve(replications.size());
    for (const auto& r : replications) {
        samples.push_back(blocking_probability(r, scope));
    }
    return estimate(samples);
}

Estimate aggregate(std::span<const RunMetrics> replications, BlockingScope scope) {
    std::vector<ClassCounts> totals;
    totals.reserve(replications.size());
    for (const auto& r : replications) {
        totals.push_back(r.total());
    }
    return aggregate(totals, scope);
}

SweepPoint make_sweep_point(double traffic_rate, double offered_erlangs, std::string strategy,
                            std::vector<RunMetrics> replications,
                            std::optional<std::size_t> class_filter) {
    std::vector<ClassCounts> counts;
    counts.reserve(replications.size());
    for (const auto& r : replications) {
        if (class_filter) {
            if (*class_filter >= r.per_class().size()) {
                throw InvalidArgument("class filter out of range");
            }
            counts.push_back(r.per_class()[*class_filter]);
        } else {
            counts.push_back(r.total());
        }
    }

    SweepPoint p;
    p.traffic_rate = traffic_rate;
    p.offered_erlangs = offered_erlangs;
    p.strategy = std::move(strategy);
    p.server = aggregate(counts, BlockingScope::server);
    p.total_denial = aggregate(counts, BlockingScope::total_denial);
    std::vector<std::optional<double>> policed;
    for (const auto& c : counts) {
        policed.push_back(policed_fraction(c));
    }
    p.mean_policed_fraction = estimate(policed).mean;
    p.replications = std::move(replications);
    return p;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(std::string_view field) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw InvalidArgument("malformed number in CSV: '" + std::string(field) + "'");
    }
    return v;
}

std::optional<double> parse_optional(std::string_view field) {
    if (field.empty()) {
        return std::nullopt;
    }
    return parse_double(field);
}

}  // namespace

std::string to_csv(std::span<const SweepPoint> points) {
    std::vector<const SweepPoint*> order;
    order.reserve(points.size());
    for (const auto& p : points) {
        order.push_back(&p);
    }
    std::stable_sort(order.begin(), order.end(), [](const SweepPoint* a, const SweepPoint* b) {
        if (a->traffic_rate != b->traffic_rate) {
            return a->traffic_rate < b->traffic_rate;
        }
        return a->strategy < b->strategy;
    });

    std::string out(kCsvHeader);
    out += '\n';
    for (const SweepPoint* p : order) {
        out += format_number(p->traffic_rate);
        out += ',';
        out += format_number(p->offered_erlangs);
        out += ',';
        out += p->strategy;
        out += ',';
        out += std::to_string(p->replications.size());
        out += ',';
        out += format_optional(p->server.mean);
        out += ',';
        out += format_number(p->server.ci95_halfwidth);
        out += ',';
        out += format_optional(p->total_denial.mean);
        out += ',';
        out += format_number(p->total_denial.ci95_halfwidth);
        out += ',';
        out += format_optional(p->mean_policed_fraction);
        out += '\n';
    }
    return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (lines.empty() || lines.front() != kCsvHeader) {
        throw InvalidArgument("CSV header does not match the sweep format");
    }
    std::vector<CsvRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != 9) {
            throw InvalidArgument("CSV line " + std::to_string(i + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, expected 9");
        }
        CsvRow row;
        row.traffic_rate_mbps = parse_double(fields[0]);
        row.offered_erlangs = parse_double(fields[1]);
        row.strategy = std::string(fields[2]);
        std::size_t reps = 0;
        const auto [ptr, ec] =
            std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), reps);
        if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size()) {
            throw InvalidArgument("malformed replication count on CSV line " +
                                  std::to_string(i + 1));
        }
        row.replications = reps;
        row.mean_server_blocking = parse_optional(fields[4]);
        row.ci95_server = parse_double(fields[5]);
        row.mean_total_denial = parse_optional(fields[6]);
        row.ci95_total = parse_double(fields[7]);
        row.mean_policed_fraction = parse_optional(fields[8]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace vodsim::metrics
