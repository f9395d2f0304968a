#include "pderm/subproblem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "pderm/kernels.hpp"
#include "pderm/random.hpp"

namespace pderm {

LocalShard make_local_shard(const ProblemSpec& spec, const Partition& part, std::int64_t k) {
    LocalShard shard;
    shard.data = extract_shard(spec.dataset, part, k);
    shard.global_index = part.assignments[std::size_t(k)];
    shard.loss = spec.loss;
    shard.lambda = spec.lambda;
    shard.n_global = spec.n();
    shard.machines = part.machines();
    shard.col_sq.resize(std::size_t(shard.data.n));
    for (std::int64_t j = 0; j < shard.data.n; ++j)
        shard.col_sq[std::size_t(j)] = shard.data.col_nrm2sq(j);
    return shard;
}

LocalShard make_local_shard(Dataset shard_data, Loss loss, double lambda, std::int64_t n_global,
                            std::int64_t machines) {
    LocalShard shard;
    shard.data = std::move(shard_data);
    shard.loss = loss;
    shard.lambda = lambda;
    shard.n_global = n_global;
    shard.machines = machines;
    shard.col_sq.resize(std::size_t(shard.data.n));
    for (std::int64_t j = 0; j < shard.data.n; ++j)
        shard.col_sq[std::size_t(j)] = shard.data.col_nrm2sq(j);
    return shard;
}

std::vector<double> shard_times(const LocalShard& shard, std::span<const double> h) {
    std::vector<double> u(std::size_t(shard.data.d), 0.0);
    for (std::int64_t j = 0; j < shard.size(); ++j) {
        if (h[std::size_t(j)] == 0.0) continue;
        const auto c = shard.data.col(j);
        kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), h[std::size_t(j)], u.data());
    }
    return u;
}

std::vector<double> shard_transpose_times(const LocalShard& shard, std::span<const double> u) {
    std::vector<double> z(static_cast<std::size_t>(shard.size()));
    for (std::int64_t j = 0; j < shard.size(); ++j) {
        const auto c = shard.data.col(j);
        z[std::size_t(j)] = kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), u.data());
    }
    return z;
}

double SubproblemView::coupling() const {
    const double n = double(shard->n_global);
    return sigma_prime / (shard->lambda * n * n);
}

SubproblemView make_view(const LocalShard& shard, std::span<const double> v,
                         std::span<const double> alpha_local, double sigma_prime) {
    SubproblemView view;
    view.shard = &shard;
    view.v = v;
    view.alpha_local = alpha_local;
    view.sigma_prime = sigma_prime;
    view.f_share = shard.lambda / double(shard.machines) * SquaredL2::conj_value(v);
    // grad_block = (1/n) X_[k]' grad g*(v); grad g* is the identity here
    view.grad_block.resize(std::size_t(shard.size()));
    const double inv_n = 1.0 / double(shard.n_global);
    for (std::int64_t j = 0; j < shard.size(); ++j) {
        const auto c = shard.data.col(j);
        view.grad_block[std::size_t(j)] =
            inv_n * kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), v.data());
    }
    return view;
}

namespace {

double objective_impl(const SubproblemView& view, std::span<const double> h, bool checked) {
    const LocalShard& shard = *view.shard;
    const double n = double(shard.n_global);
    const auto u = shard_times(shard, h);
    double obj = -view.f_share;
    obj -= kern::dot(view.grad_block.data(), h.data(), h.size());
    obj -= 0.5 * view.coupling() * kern::nrm2sq(u.data(), u.size());
    double rsum = 0.0;
    for (std::int64_t j = 0; j < shard.size(); ++j) {
        const double beta = view.alpha_local[std::size_t(j)] + h[std::size_t(j)];
        const double y = shard.data.labels[std::size_t(j)];
        rsum += checked ? conjugate_value(shard.loss, y, -beta)
                        : conjugate_value_unchecked(shard.loss, y, -beta);
    }
    return obj - rsum / n;
}

}  // namespace

double local_objective(const SubproblemView& view, std::span<const double> h) {
    return objective_impl(view, h, true);
}

double local_objective_unchecked(const SubproblemView& view, std::span<const double> h) {
    return objective_impl(view, h, false);
}

std::vector<double> local_gradient_smooth_part(const SubproblemView& view,
                                               std::span<const double> h) {
    const auto u = shard_times(*view.shard, h);
    auto g = shard_transpose_times(*view.shard, u);
    const double c = view.coupling();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = -view.grad_block[j] - c * g[j];
    return g;
}

double safe_sigma_prime(double nu, std::int64_t K) {
    if (!(nu > 0.0) || nu > 1.0) throw std::invalid_argument("nu must be in (0,1]");
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    return nu * double(K);
}

namespace {

double power_iteration_top(const LocalShard& shard, std::uint64_t seed) {
    const std::int64_t m = shard.size();
    double trace = 0.0;
    for (double q : shard.col_sq) trace += q;
    if (trace == 0.0) return 0.0;  // all-zero shard

    Rng rng(mix_seed(seed, 0x7369676d61ULL));  // "sigma"
    std::vector<double> z(static_cast<std::size_t>(m));
    for (auto& zi : z) zi = rng.next_range(-1.0, 1.0);
    double znorm = std::sqrt(kern::nrm2sq(z.data(), z.size()));
    kern::scale(z.size(), 1.0 / znorm, z.data());

    double rayleigh_prev = 0.0;
    int settled = 0;
    const int max_iters = 100000;
    for (int it = 0; it < max_iters; ++it) {
        const auto u = shard_times(shard, z);
        const double rayleigh = kern::nrm2sq(u.data(), u.size());  // ||Xz||^2 with ||z||=1
        if (rayleigh == 0.0) return 0.0;
        if (it > 0 &&
            std::abs(rayleigh - rayleigh_prev) < 1e-10 * std::max(std::abs(rayleigh), 1e-300)) {
            if (++settled >= 3) return rayleigh;
        } else {
            settled = 0;
        }
        rayleigh_prev = rayleigh;
        z = shard_transpose_times(shard, u);
        znorm = std::sqrt(kern::nrm2sq(z.data(), z.size()));
        if (znorm == 0.0) return 0.0;
        kern::scale(z.size(), 1.0 / znorm, z.data());
    }
    return rayleigh_prev;
}

}  // namespace

double sigma_k_shard(const LocalShard& shard, std::uint64_t seed) {
    return power_iteration_top(shard, seed);
}

double sigma_k(const Dataset& ds, const Partition& part, std::int64_t k, std::uint64_t seed) {
    if (part.assignments[std::size_t(k)].empty()) throw std::invalid_argument("empty shard");
    LocalShard shard;
    shard.data = extract_shard(ds, part, k);
    shard.n_global = ds.n;
    shard.machines = part.machines();
    shard.lambda = 1.0;
    shard.loss = Loss::quadratic;
    shard.col_sq.resize(std::size_t(shard.data.n));
    for (std::int64_t j = 0; j < shard.data.n; ++j)
        shard.col_sq[std::size_t(j)] = shard.data.col_nrm2sq(j);
    return power_iteration_top(shard, seed ^ std::uint64_t(k));
}

TheoryParams compute_theory(const Dataset& ds, const Partition& part, std::uint64_t seed,
                            bool with_sigma_prime_min, double nu) {
    TheoryParams tp;
    tp.sigma_max = 0.0;
    tp.sigma_sum = 0.0;
    for (std::int64_t k = 0; k < part.machines(); ++k) {
        const double sk = sigma_k(ds, part, k, seed);
        tp.sigma_per_machine.push_back(sk);
        tp.sigma_max = std::max(tp.sigma_max, sk);
        tp.sigma_sum += sk * double(part.assignments[std::size_t(k)].size());
    }
    if (with_sigma_prime_min) tp.sigma_prime_min = sigma_prime_min(ds, part, nu);
    return tp;
}

double sigma_prime_min(const Dataset& ds, const Partition& part, double nu) {
    if (ds.n > 200)
        throw std::invalid_argument("sigma_prime_min is a verification tool gated to n <= 200");
    if (!(nu > 0.0) || nu > 1.0) throw std::invalid_argument("nu must be in (0,1]");
    const std::int64_t n = ds.n;

    // machine id per example
    std::vector<std::int64_t> owner(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < part.machines(); ++k)
        for (std::int64_t i : part.assignments[std::size_t(k)]) owner[std::size_t(i)] = k;

    // dense covariance A = X'X and its block-diagonal part G
    Eigen::MatrixXd A(n, n), G(n, n);
    std::vector<double> scratch(std::size_t(ds.d), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto ci = ds.col(i);
        kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), 1.0, scratch.data());
        for (std::int64_t j = i; j < n; ++j) {
            const auto cj = ds.col(j);
            const double aij =
                kern::gather_dot(cj.idx.data(), cj.val.data(), cj.nnz(), scratch.data());
            A(i, j) = A(j, i) = aij;
            const bool same = owner[std::size_t(i)] == owner[std::size_t(j)];
            G(i, j) = G(j, i) = same ? aij : 0.0;
        }
        kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), -1.0, scratch.data());
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& evals = es.eigenvalues();
    const auto& evecs = es.eigenvectors();
    const double gmax = evals.maxCoeff();
    if (gmax <= 0.0) return 0.0;  // X == 0
    const double tol = gmax * 1e-12;
    const double anorm = A.cwiseAbs().maxCoeff();

    std::vector<int> range_cols;
    for (int j = 0; j < evals.size(); ++j) {
        if (evals(j) > tol) {
            range_cols.push_back(j);
        } else {
            // null(G) must also be null for X'X; otherwise the max is unbounded
            if ((A * evecs.col(j)).cwiseAbs().maxCoeff() > 1e-8 * std::max(anorm, 1.0))
                return kInf;
        }
    }

    const int r = int(range_cols.size());
    Eigen::MatrixXd V(n, r);
    Eigen::VectorXd inv_sqrt(r);
    for (int c = 0; c < r; ++c) {
        V.col(c) = evecs.col(range_cols[std::size_t(c)]);
        inv_sqrt(c) = 1.0 / std::sqrt(evals(range_cols[std::size_t(c)]));
    }
    const Eigen::MatrixXd M =
        inv_sqrt.asDiagonal() * (V.transpose() * A * V) * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M);
    return nu * em.eigenvalues().maxCoeff();
}

LowerBound lower_bound_sides(const ProblemSpec& spec, const Partition& part, double nu,
                             double sigma_prime, std::span<const double> alpha,
                             std::span<const double> h) {
    const std::int64_t K = part.machines();
    // LHS: D at the aggregated point
    std::vector<double> moved(alpha.begin(), alpha.end());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += nu * h[i];
    const double lhs = dual_value(spec, make_state(spec, moved));

    // RHS: (1-nu) D(alpha) + nu sum_k G_k(h_[k]; alpha)
    const auto state = make_state(spec, std::vector<double>(alpha.begin(), alpha.end()));
    const double d_ref = dual_value(spec, state);
    double gsum = 0.0;
    for (std::int64_t k = 0; k < K; ++k) {
        const auto shard = make_local_shard(spec, part, k);
        const auto& ids = part.assignments[std::size_t(k)];
        std::vector<double> alpha_loc(ids.size()), h_loc(ids.size());
        for (std::size_t j = 0; j < ids.size(); ++j) {
            alpha_loc[j] = alpha[std::size_t(ids[j])];
            h_loc[j] = h[std::size_t(ids[j])];
        }
        const auto view = make_view(shard, state.v, alpha_loc, sigma_prime);
        gsum += local_objective(view, h_loc);
    }
    return {lhs, (1.0 - nu) * d_ref + nu * gsum};
}

bool lower_bound_check(const ProblemSpec& spec, const Partition& part, double nu,
                       double sigma_prime, std::span<const double> alpha,
                       std::span<const double> h, double tol) {
    const auto sides = lower_bound_sides(spec, part, nu, sigma_prime, alpha, h);
    return sides.lhs >= sides.rhs - tol;
}

}  // namespace pderm
