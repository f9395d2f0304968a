#include "pderm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pderm/kernels.hpp"
#include "pderm/random.hpp"

namespace pderm {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_number(line) {}

double Dataset::col_nrm2sq(std::int64_t i) const {
    const std::int64_t b = col_ptr[i], e = col_ptr[i + 1];
    return kern::nrm2sq(values.data() + b, std::size_t(e - b));
}

void Dataset::check_invariants(bool check_norms) const {
    if (std::int64_t(labels.size()) != n) throw std::logic_error("labels length != n");
    if (std::int64_t(col_ptr.size()) != n + 1) throw std::logic_error("col_ptr length != n+1");
    for (std::int64_t i = 0; i < n; ++i) {
        std::int32_t prev = -1;
        for (std::int64_t p = col_ptr[i]; p < col_ptr[i + 1]; ++p) {
            if (row_idx[p] < 0 || row_idx[p] >= d) throw std::logic_error("row index out of range");
            if (row_idx[p] <= prev) throw std::logic_error("row indices not strictly increasing");
            if (values[p] == 0.0) throw std::logic_error("explicit zero stored");
            prev = row_idx[p];
        }
        if (check_norms && std::sqrt(col_nrm2sq(i)) > 1.0 + 1e-12)
            throw std::logic_error("column norm exceeds 1 after normalization");
    }
}

namespace {

const char* skip_ws(const char* p, const char* end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    return p;
}

// std::from_chars does not accept a leading '+'.
const char* parse_double(const char* p, const char* end, double& out) {
    if (p < end && *p == '+') ++p;
    auto [ptr, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{}) return nullptr;
    return ptr;
}

const char* parse_index(const char* p, const char* end, std::int64_t& out) {
    if (p < end && *p == '+') ++p;
    auto [ptr, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{}) return nullptr;
    return ptr;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::int64_t force_d) {
    Dataset ds;
    ds.col_ptr.push_back(0);
    std::string line;
    std::size_t line_no = 0;
    std::int64_t max_idx = 0;  // 1-based maximum seen
    while (std::getline(in, line)) {
        ++line_no;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        p = skip_ws(p, end);
        if (p == end) continue;  // blank line

        double label;
        const char* q = parse_double(p, end, label);
        if (!q) throw ParseError(line_no, "malformed label");
        p = q;

        std::int64_t prev_idx = 0;
        while (true) {
            p = skip_ws(p, end);
            if (p == end) break;
            std::int64_t idx;
            q = parse_index(p, end, idx);
            if (!q || q == end || *q != ':') throw ParseError(line_no, "malformed index token");
            if (idx < 1) throw ParseError(line_no, "index must be >= 1");
            if (idx > 0x7fffffff) throw ParseError(line_no, "feature index exceeds 2^31-1");
            if (idx == prev_idx) throw ParseError(line_no, "duplicate feature index");
            if (idx < prev_idx) throw ParseError(line_no, "indices not strictly increasing");
            double val;
            p = parse_double(q + 1, end, val);
            if (!p) throw ParseError(line_no, "malformed value token");
            prev_idx = idx;
            if (val != 0.0) {
                ds.row_idx.push_back(std::int32_t(idx - 1));
                ds.values.push_back(val);
            }
            max_idx = std::max(max_idx, idx);
        }
        ds.labels.push_back(label);
        ds.col_ptr.push_back(std::int64_t(ds.row_idx.size()));
    }
    ds.n = std::int64_t(ds.labels.size());
    if (ds.n == 0) throw ParseError(0, "empty input");
    ds.d = std::max(max_idx, force_d);
    if (force_d > 0 && max_idx > force_d)
        throw std::invalid_argument("forced dimension smaller than max observed index");
    return ds;
}

Dataset parse_libsvm_file(const std::string& path, std::int64_t force_d) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return parse_libsvm(f, force_d);
}

void serialize_libsvm(const Dataset& ds, std::ostream& out) {
    char buf[64];
    for (std::int64_t i = 0; i < ds.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.labels[i]);
        out << buf;
        for (std::int64_t p = ds.col_ptr[i]; p < ds.col_ptr[i + 1]; ++p) {
            std::snprintf(buf, sizeof buf, " %d:%.17g", int(ds.row_idx[p] + 1), ds.values[p]);
            out << buf;
        }
        out << '\n';
    }
}

void serialize_libsvm_file(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    serialize_libsvm(ds, f);
}

Dataset normalize_examples(Dataset ds) {
    for (std::int64_t i = 0; i < ds.n; ++i) {
        const double norm = std::sqrt(ds.col_nrm2sq(i));
        if (norm > 1.0 + 1e-12) {
            const std::int64_t b = ds.col_ptr[i];
            kern::scale(std::size_t(ds.col_ptr[i + 1] - b), 1.0 / norm, ds.values.data() + b);
        }
    }
    return ds;
}

PartitionStrategy parse_partition_strategy(const std::string& s) {
    if (s == "contiguous") return PartitionStrategy::contiguous;
    if (s == "round-robin") return PartitionStrategy::round_robin;
    if (s == "random") return PartitionStrategy::random;
    throw std::invalid_argument("unknown partition strategy: " + s);
}

void Partition::check_invariants(std::int64_t n) const {
    std::vector<std::int64_t> all;
    for (const auto& part : assignments) {
        if (part.empty()) throw std::logic_error("empty shard");
        all.insert(all.end(), part.begin(), part.end());
    }
    if (std::int64_t(all.size()) != n) throw std::logic_error("partition does not cover [n]");
    std::sort(all.begin(), all.end());
    for (std::int64_t i = 0; i < n; ++i)
        if (all[i] != i) throw std::logic_error("partition not a disjoint cover of [n]");
}

Partition make_partition(std::int64_t n, std::int64_t K, PartitionStrategy strategy,
                         std::uint64_t seed) {
    if (K <= 0 || K > n) throw std::invalid_argument("need 1 <= K <= n");
    Partition part;
    part.assignments.resize(std::size_t(K));
    switch (strategy) {
        case PartitionStrategy::contiguous: {
            // first (n mod K) shards get the extra element
            const std::int64_t base = n / K, extra = n % K;
            std::int64_t next = 0;
            for (std::int64_t k = 0; k < K; ++k) {
                const std::int64_t size = base + (k < extra ? 1 : 0);
                for (std::int64_t j = 0; j < size; ++j) part.assignments[k].push_back(next++);
            }
            break;
        }
        case PartitionStrategy::round_robin: {
            for (std::int64_t i = 0; i < n; ++i) part.assignments[i % K].push_back(i);
            break;
        }
        case PartitionStrategy::random: {
            std::vector<std::int64_t> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            Rng rng(mix_seed(seed, 0x7061727469746eULL));  // "partitn"
            for (std::int64_t i = n - 1; i > 0; --i) {
                const std::int64_t j = std::int64_t(rng.next_below(std::uint64_t(i + 1)));
                std::swap(order[i], order[j]);
            }
            const std::int64_t base = n / K, extra = n % K;
            std::int64_t next = 0;
            for (std::int64_t k = 0; k < K; ++k) {
                const std::int64_t size = base + (k < extra ? 1 : 0);
                auto& shard = part.assignments[k];
                shard.assign(order.begin() + next, order.begin() + next + size);
                std::sort(shard.begin(), shard.end());
                next += size;
            }
            break;
        }
    }
    return part;
}

Dataset extract_shard(const Dataset& ds, const Partition& part, std::int64_t k) {
    const auto& ids = part.assignments[std::size_t(k)];
    Dataset out;
    out.n = std::int64_t(ids.size());
    out.d = ds.d;
    out.col_ptr.push_back(0);
    for (std::int64_t i : ids) {
        const auto c = ds.col(i);
        out.row_idx.insert(out.row_idx.end(), c.idx.begin(), c.idx.end());
        out.values.insert(out.values.end(), c.val.begin(), c.val.end());
        out.col_ptr.push_back(std::int64_t(out.row_idx.size()));
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

}  // namespace pderm
