#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pderm {

// Inputs to the iteration-complexity bounds. gamma is required (> 0) by the
// smooth bounds, lipschitz and initial_dual_subopt by the Lipschitz bound.
struct RateInputs {
    double lambda = 0;
    double gamma = 0;
    double n = 0;
    double sigma_max = 0;
    double sigma_sum = 0;  // sum_k sigma_k |P_k|
    double sigma_prime = 0;
    double nu = 0;
    double theta = 0;  // [0,1]; 1 reports +inf
    double lipschitz = 0;
    double initial_dual_subopt = 0;  // D(alpha*) - D(alpha^0), or an upper bound
    double epsilon_d = 0;
    double epsilon_gap = 0;
};

// (1/(nu(1-theta))) (lambda gamma n + sigma_max sigma')/(lambda gamma n)
double smooth_leading_factor(const RateInputs& in);

// Rounds T with E[dual suboptimality] <= eps_D: factor * log(1/eps_D).
double smooth_rounds_dual(const RateInputs& in);

// Rounds T with E[gap] <= eps_Gap: factor * log(factor/eps_Gap).
double smooth_rounds_gap(const RateInputs& in);

// Rounds for L-Lipschitz losses; T/T0/t0 are the minimal values satisfying
// the three inequalities (any larger triple is also valid).
struct LipschitzRounds {
    double t0;
    double rounds_to_tail;  // T0
    double rounds;          // T
};
LipschitzRounds lipschitz_rounds(const RateInputs& in);

// Preset bounds: adding (nu=1, sigma'=K) vs averaging (nu=1/K, sigma'=1),
// both on the gap criterion.
double smooth_gap_rounds_adding(double lambda, double gamma, double n, double sigma_max,
                                double machines, double theta, double epsilon_gap);
double smooth_gap_rounds_averaging(double lambda, double gamma, double n, double sigma_max,
                                   double machines, double theta, double epsilon_gap);

// Mean of the iterates in the window [T0+1, T-1]; the reported gap for
// Lipschitz losses is evaluated here. Throws on an empty window.
std::vector<double> averaged_iterate(std::span<const std::vector<double>> history,
                                     std::int64_t t_head, std::int64_t t_final);

}  // namespace pderm
