#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pderm/engine.hpp"
#include "pderm/problem.hpp"
#include "pderm/random.hpp"

namespace pderm {

// Random small-instance generator for the oracle and property harnesses.
// Labels are +-1 (required by the margin losses, harmless for quadratic);
// columns are normalized at construction.
struct InstanceConfig {
    std::int64_t n = 16;
    std::int64_t d = 8;
    std::int64_t machines = 2;
    double density = 0.5;
    Loss loss = Loss::quadratic;
    double lambda = 0.1;
    std::uint64_t seed = 0;
    PartitionStrategy strategy = PartitionStrategy::random;
};

struct Instance {
    ProblemSpec spec;
    Partition part;
};

Dataset generate_sparse_dataset(std::int64_t n, std::int64_t d, double density,
                                std::uint64_t seed);
// Columns clustered around one shared direction; the worst case for
// cross-machine coupling (sigma'_min close to nu K).
Dataset generate_correlated_dataset(std::int64_t n, std::int64_t d, double noise,
                                    std::uint64_t seed);
Instance generate_instance(const InstanceConfig& config);

// Uniform draw from the dual feasible box (interior for logistic), and a
// direction h keeping alpha + h feasible.
std::vector<double> random_feasible_alpha(const ProblemSpec& spec, Rng& rng);
std::vector<double> random_feasible_direction(const ProblemSpec& spec,
                                              std::span<const double> alpha, Rng& rng);

// Brute-force sup_a { a b - l(a) } over an adaptively widened grid, zoomed
// until the maximizer is interior; +inf when the sup keeps growing at the
// widened boundary. Validates the closed forms within 1e-6.
double oracle_conjugate(Loss loss, double y, double b, std::int64_t grid_resolution = 4096);

// Reference dual optimum for n <= 40: a dense linear solve for the quadratic
// loss, long-run cyclic exact coordinate maximization (derivative bisection)
// otherwise. `gap` reports the certificate actually achieved.
struct DenseDualOpt {
    std::vector<double> alpha;
    double dual_value;
    double gap;
};
DenseDualOpt oracle_dense_dual_opt(const ProblemSpec& spec, double gap_tol = 1e-12);

// Central differences with the given step.
std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double step = 1e-5);

struct CheckResult {
    std::string name;
    std::int64_t trials = 0;
    std::int64_t failures = 0;
    std::string first_failure;  // human-readable counterexample pointer
};

struct Report {
    std::vector<CheckResult> checks;
    std::string dump_dir;
    bool all_passed() const;
    std::int64_t total_failures() const;
};

// Writes the failing instance as a LIBSVM file plus a replay config; returns
// a pointer string for the report.
std::string dump_counterexample(const std::string& dump_dir, const std::string& check_name,
                                const Dataset& dataset, const InstanceConfig& config,
                                const std::string& detail);

// Runs every module invariant over `trials` random small instances; failures
// dump the instance as a LIBSVM file plus a replay config under dump_dir.
Report property_suite(std::uint64_t seed, std::int64_t trials,
                      const std::string& dump_dir = "pderm-counterexamples");
void print_report(std::ostream& out, const Report& report);

}  // namespace pderm
