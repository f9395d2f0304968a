#pragma once

#include <span>
#include <vector>

#include "pderm/dataset.hpp"
#include "pderm/losses.hpp"

namespace pderm {

// Regularizer g fixed to the squared Euclidean norm behind a narrow
// value / conjugate-value / conjugate-gradient interface, so the primal-dual
// mapping contracts stay generic in g. With g = ||.||^2/2 the conjugate is
// g* = ||.||^2/2 and grad g* is the identity.
struct SquaredL2 {
    static double value(std::span<const double> w);
    static double conj_value(std::span<const double> v);
    static void conj_grad(std::span<const double> v, std::span<double> out);
};

// min_w P(w) = (1/n) sum_i l_i(x_i'w) + lambda g(w)
struct ProblemSpec {
    Dataset dataset;
    Loss loss;
    double lambda;

    ProblemSpec(Dataset ds, Loss l, double lam);
    std::int64_t n() const { return dataset.n; }
    std::int64_t d() const { return dataset.d; }
    std::span<const double> labels_span() const;
};

// Dual iterate alpha with its shared vector v = X alpha / (lambda n), kept
// consistent across rounds by the engine.
struct DualState {
    std::vector<double> alpha;
    std::vector<double> v;
};

std::vector<double> compute_v(const ProblemSpec& spec, std::span<const double> alpha);
DualState make_state(const ProblemSpec& spec, std::vector<double> alpha);
DualState zero_state(const ProblemSpec& spec);

// ||v - X alpha/(lambda n)|| <= tol * (1 + ||v||)
bool state_consistent(const ProblemSpec& spec, const DualState& state, double tol = 1e-8);
void check_alpha_feasible(const ProblemSpec& spec, std::span<const double> alpha);

double primal_value(const ProblemSpec& spec, std::span<const double> w);

// D(alpha) = (1/n) sum_i -l*_i(-alpha_i) - lambda g*(v); throws domain_error
// on an infeasible alpha_i. The unchecked variant skips the O(n) feasibility
// scan for hot loops.
double dual_value(const ProblemSpec& spec, const DualState& state);
double dual_value_unchecked(const ProblemSpec& spec, const DualState& state);

// w(alpha) = grad g*(v); a copy of v for the squared Euclidean norm.
std::vector<double> primal_from_dual(const ProblemSpec& spec, const DualState& state);

// Gap(alpha) = P(w(alpha)) - D(alpha), recomputed fresh from w(alpha).
double duality_gap(const ProblemSpec& spec, const DualState& state);

// f(alpha) = lambda g*(v(alpha)) and its gradient (1/n) X' grad g*(v).
double dual_f(const ProblemSpec& spec, std::span<const double> v);
std::vector<double> grad_f(const ProblemSpec& spec, std::span<const double> v);

}  // namespace pderm
