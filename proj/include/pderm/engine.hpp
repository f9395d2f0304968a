#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pderm/problem.hpp"
#include "pderm/solvers.hpp"
#include "pderm/subproblem.hpp"

namespace pderm {

// Aggregation presets: nu = 1 with sigma' = K (adding) or nu = 1/K with
// sigma' = 1 (averaging); any nu in (0,1] with sigma' = nu K is safe.
struct RunConfig {
    double nu = 1.0;
    double sigma_prime = 0.0;  // <= 0 selects the safe value nu*K
    std::int64_t rounds = 10;  // T; 0 measures the initial state only
    double gap_tol = 0.0;      // epsilon; 0 disables gap stopping
    std::int64_t gap_every = 1;
    SolverConfig solver;
    std::uint64_t seed = 0;

    double resolved_sigma_prime(std::int64_t K) const;
    void validate() const;
};

struct RoundMetrics {
    std::int64_t round;
    double elapsed_ms;
    double primal;
    double dual;
    double gap;
    std::int64_t bytes_per_machine;
    std::int64_t local_iters_total;  // cumulative over rounds and machines
};

enum class RunStatus { converged, max_rounds, diverged };
const char* run_status_name(RunStatus s);

struct RunResult {
    DualState state;
    std::vector<RoundMetrics> trace;
    RunStatus status = RunStatus::max_rounds;
    std::int64_t rounds_completed = 0;
};

// Per-machine solver construction hook; tests inject the exact reference
// solver through this.
using SolverFactory = std::function<std::unique_ptr<LocalSolver>(std::int64_t k)>;
SolverFactory default_solver_factory(const SolverConfig& config, Loss loss);

// Called with each measured round's row as soon as it exists, so metrics
// files can be appended to while the run is still going.
using RowSink = std::function<void(const RoundMetrics&)>;

// Outer loop with the in-process transport: K worker threads in lockstep
// rounds, reduce-all over preallocated slots in ascending machine order.
// Dual value dropping by more than 1e6 in a round aborts the run flagged as
// unsafe-sigma' divergence.
RunResult run(const ProblemSpec& spec, const Partition& part, const RunConfig& config);
RunResult run(const ProblemSpec& spec, const Partition& part, const RunConfig& config,
              const SolverFactory& factory, std::vector<double> alpha0 = {},
              const RowSink& on_row = {});

// v' = v + nu * sum_k updates[k], summed in ascending machine order. Throws
// on a missing update.
std::vector<double> aggregate(std::span<const double> v,
                              const std::vector<std::vector<double>>& updates, double nu);

// Runs the alpha-only semantics (recompute v from scratch each round) and the
// practical semantics (maintain v via delta-v) side by side with identical
// solver seeds; true iff all iterates match within 1e-10.
bool equivalence_check(const ProblemSpec& spec, const Partition& part, const RunConfig& config,
                       double tol = 1e-10);

// TCP transport: one coordinator (holding the full dataset for gap
// evaluation) plus K worker processes, one shard each. Workers must be
// launched with the same rounds/gap-every/nu/sigma'/solver/seed settings.
RunResult run_tcp_coordinator(const ProblemSpec& spec, const Partition& part,
                              const RunConfig& config, const std::string& listen_addr,
                              const RowSink& on_row = {});
void run_tcp_worker(const LocalShard& shard, const RunConfig& config,
                    const std::string& connect_addr, std::int64_t machine_id);

// Worker-side state shared by both transports; one round = reseed the solver
// for (seed, machine, round), solve the local subproblem, fold nu*h into the
// local alpha block, hand back delta-v.
class RoundWorker {
  public:
    RoundWorker(LocalShard shard, std::unique_ptr<LocalSolver> solver, double nu,
                double sigma_prime, std::uint64_t run_seed, std::int64_t machine_id,
                std::vector<double> alpha_local);

    LocalUpdate round(std::int64_t t, std::span<const double> v);
    const std::vector<double>& alpha_local() const { return alpha_local_; }
    const LocalShard& shard() const { return shard_; }

  private:
    LocalShard shard_;
    std::unique_ptr<LocalSolver> solver_;
    double nu_;
    double sigma_prime_;
    std::uint64_t run_seed_;
    std::int64_t machine_id_;
    std::vector<double> alpha_local_;
};

}  // namespace pderm
