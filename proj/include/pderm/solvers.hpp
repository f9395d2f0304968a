#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pderm/subproblem.hpp"

namespace pderm {

// Local solver ids. CD and FISTA handle every loss (FISTA proxes the
// separable l* terms); the batch gradient methods require the smooth
// subproblem that only the quadratic loss yields.
enum class SolverId { cd, gd, cg, lbfgs, bb, fista };

SolverId parse_solver_id(const std::string& s);
const char* solver_name(SolverId id);
// Throws std::invalid_argument on an unsupported solver/loss pairing, before
// any round runs.
void validate_solver_loss(SolverId id, Loss loss);

struct SolverConfig {
    SolverId id = SolverId::cd;
    std::int64_t local_iters = 1;  // H, inner iteration budget
    std::int64_t memory = 0;       // L-BFGS; 0 means "use H"
    double ls_initial_step = 1.0;  // GD line search
    double ls_shrink = 0.5;
    double ls_sufficient_decrease = 1e-4;
    std::uint64_t seed = 0;  // CD sampling

    void validate() const;
};

struct LocalUpdate {
    std::vector<double> h_local;
    std::vector<double> delta_v;  // (1/(lambda n)) X_[k] h, recomputed from the final h
    std::int64_t inner_iterations = 0;
};

class LocalSolver {
  public:
    virtual ~LocalSolver() = default;
    // Must never worsen the local objective: G(h) >= G(0), h = 0 is legal.
    virtual LocalUpdate solve(const SubproblemView& view) = 0;
    // Round-scoped reseed for randomized solvers; deterministic solvers ignore it.
    virtual void set_round_seed(std::uint64_t) {}
    virtual const char* name() const = 0;
};

std::unique_ptr<LocalSolver> make_solver(const SolverConfig& config, Loss loss);

// Exact reference solver (dense QP for quadratic, high-precision cyclic
// bisection ascent otherwise); verification tooling, small shards only.
std::unique_ptr<LocalSolver> make_exact_reference_solver();

// Exact maximizer of the 1-D restriction of G at local coordinate j, holding
// the other coordinates of current_h fixed. Returns the step delta.
double cd_step(const SubproblemView& view, std::int64_t j, std::span<const double> current_h);

// Exact local solution h* for small shards: dense QP when the loss is
// quadratic, otherwise cyclic coordinate ascent with bisection on the 1-D
// derivative (independent of the production cd_step algebra).
std::vector<double> reference_local_solution(const SubproblemView& view);

// Theta = (G(h*) - G(h)) / (G(h*) - G(0)); 0 when the denominator is below
// 1e-14 (the reference point is already optimal).
double measure_theta(const SubproblemView& view, std::span<const double> h);

// dl*/db, used by the bisection reference; kept here with the solvers since
// the loss table itself only needs values.
double conjugate_derivative(Loss loss, double y, double b);

}  // namespace pderm
