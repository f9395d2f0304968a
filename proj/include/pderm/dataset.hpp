#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pderm {

// One example's feature vector: sorted 0-based index/value pairs into the
// Dataset's CSC arrays.
struct SparseCol {
    std::span<const std::int32_t> idx;
    std::span<const double> val;
    std::size_t nnz() const { return idx.size(); }
};

// Sparse design matrix X in R^{d x n}, stored column-major (one column per
// example), plus labels. Immutable after construction; safe to share
// read-only across worker threads.
struct Dataset {
    std::int64_t n = 0;  // examples
    std::int64_t d = 0;  // features
    std::vector<std::int64_t> col_ptr;  // size n+1
    std::vector<std::int32_t> row_idx;  // strictly increasing within a column
    std::vector<double> values;         // no explicit zeros
    std::vector<double> labels;         // size n

    SparseCol col(std::int64_t i) const {
        const std::int64_t b = col_ptr[i], e = col_ptr[i + 1];
        return {std::span<const std::int32_t>(row_idx.data() + b, std::size_t(e - b)),
                std::span<const double>(values.data() + b, std::size_t(e - b))};
    }
    double col_nrm2sq(std::int64_t i) const;

    // Throws std::logic_error if any structural invariant fails (index range,
    // strict ordering, norms within 1 + 1e-12 when `check_norms`).
    void check_invariants(bool check_norms) const;
};

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& what);
    std::size_t line_number;
};

// LIBSVM text: `<label> <idx>:<val> ...`, 1-based strictly increasing indices.
// d is the max observed index unless force_d overrides it (shard files may
// omit trailing features). Duplicate indices are rejected, not summed.
Dataset parse_libsvm(std::istream& in, std::int64_t force_d = 0);
Dataset parse_libsvm_file(const std::string& path, std::int64_t force_d = 0);

// Inverse of parse_libsvm at 17 significant digits, 1-based indices.
void serialize_libsvm(const Dataset& ds, std::ostream& out);
void serialize_libsvm_file(const Dataset& ds, const std::string& path);

// Columns with ||x_i|| > 1 (beyond 1 + 1e-12) are scaled to unit norm; others
// are left untouched, so the operation is exactly idempotent.
Dataset normalize_examples(Dataset ds);

enum class PartitionStrategy { contiguous, round_robin, random };
PartitionStrategy parse_partition_strategy(const std::string& s);

// Disjoint cover of {0,...,n-1}; each shard's indices sorted ascending.
struct Partition {
    std::vector<std::vector<std::int64_t>> assignments;
    std::int64_t machines() const { return std::int64_t(assignments.size()); }
    void check_invariants(std::int64_t n) const;
};

// Sizes differ by at most one. `random` is a seed-deterministic Fisher-Yates
// shuffle followed by a contiguous split.
Partition make_partition(std::int64_t n, std::int64_t K, PartitionStrategy strategy,
                         std::uint64_t seed);

// Extracts machine k's columns/labels as a standalone Dataset in shard-local
// order (used by the shard CLI command and the TCP workers).
Dataset extract_shard(const Dataset& ds, const Partition& part, std::int64_t k);

}  // namespace pderm
