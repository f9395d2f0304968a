#pragma once

// Shared helpers for the test binaries. Brute-force oracles for specific
// quantities stay local to the test file that owns them; this header only
// carries generic construction utilities.

#include <cmath>
#include <span>
#include <vector>

#include "pderm/dataset.hpp"
#include "pderm/problem.hpp"

namespace pderm::testutil {

// Dataset from dense column-major data (columns[i] has length d).
inline Dataset dense_dataset(const std::vector<std::vector<double>>& columns,
                             const std::vector<double>& labels) {
    Dataset ds;
    ds.n = std::int64_t(columns.size());
    ds.d = columns.empty() ? 0 : std::int64_t(columns.front().size());
    ds.col_ptr.push_back(0);
    for (const auto& col : columns) {
        for (std::size_t j = 0; j < col.size(); ++j) {
            if (col[j] != 0.0) {
                ds.row_idx.push_back(std::int32_t(j));
                ds.values.push_back(col[j]);
            }
        }
        ds.col_ptr.push_back(std::int64_t(ds.row_idx.size()));
    }
    ds.labels = labels;
    return ds;
}

inline std::vector<double> densify(const Dataset& ds, std::int64_t i) {
    std::vector<double> col(std::size_t(ds.d), 0.0);
    const auto c = ds.col(i);
    for (std::size_t p = 0; p < c.nnz(); ++p) col[std::size_t(c.idx[p])] = c.val[p];
    return col;
}

inline double dot_dense(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace pderm::testutil
