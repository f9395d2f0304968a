#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pderm/dataset.hpp"
#include "pderm/losses.hpp"
#include "pderm/problem.hpp"

namespace pderm {

// Machine k's slice of the problem: local columns in shard order plus the
// scalars every round needs. Owned by one worker; immutable during a round.
struct LocalShard {
    Dataset data;  // |P_k| columns, global feature dimension
    std::vector<std::int64_t> global_index;
    Loss loss;
    double lambda;
    std::int64_t n_global;
    std::int64_t machines;
    std::vector<double> col_sq;  // ||x_j||^2 per local column

    std::int64_t size() const { return data.n; }
};

LocalShard make_local_shard(const ProblemSpec& spec, const Partition& part, std::int64_t k);
// TCP workers build the shard from a pre-split file; global metadata comes
// from flags.
LocalShard make_local_shard(Dataset shard_data, Loss loss, double lambda, std::int64_t n_global,
                            std::int64_t machines);

// u = X_[k] h (dense d-vector) and z = X_[k]' u (local-length vector)
std::vector<double> shard_times(const LocalShard& shard, std::span<const double> h);
std::vector<double> shard_transpose_times(const LocalShard& shard, std::span<const double> u);

// Everything needed to evaluate the local objective
//   G(h) = -f_share - <grad_block, h> - sigma'/(2 lambda n^2) ||X_[k] h||^2
//          - (1/n) sum_j l*_j(-(alpha_j + h_j))
// against the round's shared vector v. f_share = (lambda/K) g*(v) and
// grad_block = (1/n) X_[k]' grad g*(v), so sum_k G_k(0) = D(alpha).
struct SubproblemView {
    const LocalShard* shard;
    std::span<const double> v;
    std::span<const double> alpha_local;
    std::vector<double> grad_block;
    double sigma_prime;
    double f_share;

    std::int64_t size() const { return shard->size(); }
    // sigma' / (lambda n^2), the coefficient on ||X_[k] h||^2 gradients
    double coupling() const;
};

SubproblemView make_view(const LocalShard& shard, std::span<const double> v,
                         std::span<const double> alpha_local, double sigma_prime);

// Throws domain_error when alpha + h leaves the feasible set (the -inf value
// of the exact objective).
double local_objective(const SubproblemView& view, std::span<const double> h);
double local_objective_unchecked(const SubproblemView& view, std::span<const double> h);

// Gradient of the smooth part only (excludes the l* terms):
//   -grad_block - sigma'/(lambda n^2) X_[k]'(X_[k] h)
std::vector<double> local_gradient_smooth_part(const SubproblemView& view,
                                               std::span<const double> h);

// sigma' := nu K, safe for any partition (never below sigma'_min).
double safe_sigma_prime(double nu, std::int64_t K);

// Largest squared singular value of the local block, by power iteration with
// a seeded start; converges when the Rayleigh quotient moves by less than
// 1e-10 relative over 3 consecutive iterations.
double sigma_k(const Dataset& ds, const Partition& part, std::int64_t k, std::uint64_t seed = 1);
double sigma_k_shard(const LocalShard& shard, std::uint64_t seed = 1);

struct TheoryParams {
    std::vector<double> sigma_per_machine;
    double sigma_max;
    double sigma_sum;  // sum_k sigma_k |P_k|
    std::optional<double> sigma_prime_min;  // small instances only
};
TheoryParams compute_theory(const Dataset& ds, const Partition& part, std::uint64_t seed = 1,
                            bool with_sigma_prime_min = false, double nu = 1.0);

// nu * max{ h' X'X h : h' G h <= 1 } with G the block-diagonal part of the
// covariance, via a pseudo-inverse pencil reduction restricted to range(G).
// Verification-only; refuses n > 200. Reports +inf if X'X does not vanish on
// the null space of G (cannot happen when G comes from the same X).
double sigma_prime_min(const Dataset& ds, const Partition& part, double nu);

// Separable lower bound on the dual: D(alpha + nu sum_k h_[k]) >=
// (1-nu) D(alpha) + nu sum_k G_k(h_[k]; alpha) - tol.
bool lower_bound_check(const ProblemSpec& spec, const Partition& part, double nu,
                       double sigma_prime, std::span<const double> alpha,
                       std::span<const double> h, double tol = 1e-9);

// Both sides of the check, for diagnostics and tests.
struct LowerBound {
    double lhs;  // D(alpha + nu h)
    double rhs;  // (1-nu) D(alpha) + nu sum_k G_k
};
LowerBound lower_bound_sides(const ProblemSpec& spec, const Partition& part, double nu,
                             double sigma_prime, std::span<const double> alpha,
                             std::span<const double> h);

}  // namespace pderm
