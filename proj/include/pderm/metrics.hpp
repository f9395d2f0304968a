#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pderm/engine.hpp"

namespace pderm {

inline constexpr const char* kMetricsHeader =
    "round,elapsed_ms,primal,dual,gap,bytes_per_machine,local_iters_total";

// CSV is append-only during a run: header first, then one row per measured
// round. Objective columns carry 17 significant digits so identical runs
// produce identical bytes.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const RoundMetrics& row);
void write_metrics_csv(const std::string& path, const std::vector<RoundMetrics>& trace);

// Round-trip reader for the same format; validates the header and the
// row/elapsed monotonicity invariants.
std::vector<RoundMetrics> read_metrics_csv(std::istream& in);
std::vector<RoundMetrics> read_metrics_csv_file(const std::string& path);

}  // namespace pderm
