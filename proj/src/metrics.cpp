#include "pderm/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pderm {

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const RoundMetrics& row) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%lld,%.3f,%.17g,%.17g,%.17g,%lld,%lld\n",
                  static_cast<long long>(row.round), row.elapsed_ms, row.primal, row.dual,
                  row.gap, static_cast<long long>(row.bytes_per_machine),
                  static_cast<long long>(row.local_iters_total));
    out << buf;
}

void write_metrics_csv(const std::string& path, const std::vector<RoundMetrics>& trace) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_metrics_header(f);
    for (const auto& row : trace) write_metrics_row(f, row);
}

namespace {

double parse_field(const std::string& s, const char* what) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b < e && *b == '+') ++b;
    double out;
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
        throw std::runtime_error(std::string("bad metrics field ") + what + ": " + s);
    return out;
}

}  // namespace

std::vector<RoundMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty metrics file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header: " + line);

    std::vector<RoundMetrics> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw std::runtime_error("bad metrics row: " + line);
        RoundMetrics row{};
        row.round = std::int64_t(parse_field(fields[0], "round"));
        row.elapsed_ms = parse_field(fields[1], "elapsed_ms");
        row.primal = parse_field(fields[2], "primal");
        row.dual = parse_field(fields[3], "dual");
        row.gap = parse_field(fields[4], "gap");
        row.bytes_per_machine = std::int64_t(parse_field(fields[5], "bytes_per_machine"));
        row.local_iters_total = std::int64_t(parse_field(fields[6], "local_iters_total"));
        if (!rows.empty()) {
            if (row.round <= rows.back().round)
                throw std::runtime_error("rounds not strictly increasing");
            if (row.elapsed_ms < rows.back().elapsed_ms)
                throw std::runtime_error("elapsed_ms decreasing");
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<RoundMetrics> read_metrics_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return read_metrics_csv(f);
}

}  // namespace pderm
