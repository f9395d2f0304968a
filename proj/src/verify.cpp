#include "pderm/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pderm/kernels.hpp"
#include "pderm/solvers.hpp"
#include "pderm/subproblem.hpp"

namespace pderm {

Dataset generate_sparse_dataset(std::int64_t n, std::int64_t d, double density,
                                std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x64617461ULL));  // "data"
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.col_ptr.push_back(0);
    const std::int64_t nnz_target = std::max<std::int64_t>(1, std::int64_t(std::lround(density * double(d))));
    std::vector<std::int32_t> pool(static_cast<std::size_t>(d));
    for (std::int64_t j = 0; j < d; ++j) pool[std::size_t(j)] = std::int32_t(j);
    for (std::int64_t i = 0; i < n; ++i) {
        // partial Fisher-Yates picks nnz distinct feature ids
        for (std::int64_t j = 0; j < nnz_target; ++j) {
            const std::int64_t pick =
                j + std::int64_t(rng.next_below(std::uint64_t(d - j)));
            std::swap(pool[std::size_t(j)], pool[std::size_t(pick)]);
        }
        std::vector<std::int32_t> idx(pool.begin(), pool.begin() + nnz_target);
        std::sort(idx.begin(), idx.end());
        for (std::int32_t r : idx) {
            double val = rng.next_range(-1.0, 1.0);
            if (val == 0.0) val = 0.5;
            ds.row_idx.push_back(r);
            ds.values.push_back(val);
        }
        ds.col_ptr.push_back(std::int64_t(ds.row_idx.size()));
        ds.labels.push_back(rng.next_unit() < 0.5 ? -1.0 : 1.0);
    }
    return normalize_examples(std::move(ds));
}

Dataset generate_correlated_dataset(std::int64_t n, std::int64_t d, double noise,
                                    std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x636f7272ULL));  // "corr"
    std::vector<double> base(static_cast<std::size_t>(d));
    for (auto& b : base) b = rng.next_range(0.2, 1.0);
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.col_ptr.push_back(0);
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<double> col(static_cast<std::size_t>(d));
        double nrm = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            col[std::size_t(j)] = base[std::size_t(j)] + noise * rng.next_range(-1.0, 1.0);
            nrm += col[std::size_t(j)] * col[std::size_t(j)];
        }
        nrm = std::sqrt(nrm);
        for (std::int64_t j = 0; j < d; ++j) {
            const double val = col[std::size_t(j)] / nrm;
            if (val != 0.0) {
                ds.row_idx.push_back(std::int32_t(j));
                ds.values.push_back(val);
            }
        }
        ds.col_ptr.push_back(std::int64_t(ds.row_idx.size()));
        ds.labels.push_back(rng.next_unit() < 0.5 ? -1.0 : 1.0);
    }
    return normalize_examples(std::move(ds));
}

Instance generate_instance(const InstanceConfig& config) {
    Dataset ds = generate_sparse_dataset(config.n, config.d, config.density, config.seed);
    Partition part =
        make_partition(config.n, config.machines, config.strategy, mix_seed(config.seed, 17));
    return Instance{ProblemSpec(std::move(ds), config.loss, config.lambda), std::move(part)};
}

std::vector<double> random_feasible_alpha(const ProblemSpec& spec, Rng& rng) {
    std::vector<double> alpha(static_cast<std::size_t>(spec.n()));
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        const Interval box = alpha_interval(spec.loss, spec.dataset.labels[std::size_t(i)]);
        const double lo = std::isfinite(box.lo) ? box.lo : -2.0;
        const double hi = std::isfinite(box.hi) ? box.hi : 2.0;
        double a = rng.next_range(lo, hi);
        if (spec.loss == Loss::logistic) a = std::clamp(a, lo + 1e-9, hi - 1e-9);
        alpha[std::size_t(i)] = a;
    }
    return alpha;
}

std::vector<double> random_feasible_direction(const ProblemSpec& spec,
                                              std::span<const double> alpha, Rng& rng) {
    std::vector<double> h(static_cast<std::size_t>(spec.n()));
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        const Interval box = alpha_interval(spec.loss, spec.dataset.labels[std::size_t(i)]);
        const double lo = std::isfinite(box.lo) ? box.lo : -2.0;
        const double hi = std::isfinite(box.hi) ? box.hi : 2.0;
        double target = rng.next_range(lo, hi);
        if (spec.loss == Loss::logistic) target = std::clamp(target, lo + 1e-9, hi - 1e-9);
        h[std::size_t(i)] = target - alpha[std::size_t(i)];
    }
    return h;
}

double oracle_conjugate(Loss loss, double y, double b, std::int64_t grid_resolution) {
    double radius = 2.0;
    for (int widen = 0; widen < 48; ++widen) {
        double lo = -radius, hi = radius;
        double best = -kInf;
        double best_a = 0.0;
        // three zoom passes around the running argmax
        for (int pass = 0; pass < 3; ++pass) {
            const double step = (hi - lo) / double(grid_resolution);
            for (std::int64_t g = 0; g <= grid_resolution; ++g) {
                const double a = lo + step * double(g);
                const double val = a * b - loss_value(loss, y, a);
                if (val > best) {
                    best = val;
                    best_a = a;
                }
            }
            lo = best_a - 2.0 * step;
            hi = best_a + 2.0 * step;
        }
        if (std::abs(best_a) < 0.9 * radius) return best;  // interior maximizer
        radius *= 4.0;
        if (radius > 1e12) break;
    }
    return kInf;  // still growing at the widened boundary
}

namespace {

// Exact 1-D dual coordinate maximizer by derivative bisection, local to the
// oracle; shares no stepping code with the production solvers.
double dual_coordinate_step(const ProblemSpec& spec, std::int64_t i, double alpha_i,
                            double xi_dot_s, double col_sq) {
    const double y = spec.dataset.labels[std::size_t(i)];
    const double n = double(spec.n());
    const double c = 1.0 / (spec.lambda * n * n);
    const Interval box = alpha_interval(spec.loss, y);

    auto dphi = [&](double delta) {
        // d/d delta of  -(1/n) l*(-(alpha+delta)) - (1/(2 lambda n^2))||s + delta x_i||^2
        return -c * (xi_dot_s + col_sq * delta) +
               conjugate_derivative(spec.loss, y, -(alpha_i + delta)) / n;
    };

    double lo, hi;
    if (std::isfinite(box.lo)) lo = box.lo - alpha_i;
    else {
        lo = -1.0;
        while (dphi(lo) > 0.0 && lo > -1e12) lo *= 2.0;
    }
    if (std::isfinite(box.hi)) hi = box.hi - alpha_i;
    else {
        hi = 1.0;
        while (dphi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
    }
    if (spec.loss == Loss::logistic) {
        lo += 1e-12;
        hi -= 1e-12;
    }
    if (dphi(lo) <= 0.0) return lo;
    if (dphi(hi) >= 0.0) return hi;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (dphi(mid) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

DenseDualOpt oracle_dense_dual_opt(const ProblemSpec& spec, double gap_tol) {
    if (spec.n() > 40) throw std::invalid_argument("dense dual oracle gated to n <= 40");
    const std::int64_t n = spec.n();
    DenseDualOpt out;

    if (spec.loss == Loss::quadratic) {
        // stationarity: (lambda n I + X'X) alpha = lambda n y
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        std::vector<double> scratch(std::size_t(spec.d()), 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
            const auto ci = spec.dataset.col(i);
            kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), 1.0, scratch.data());
            for (std::int64_t j = i; j < n; ++j) {
                const auto cj = spec.dataset.col(j);
                A(i, j) = A(j, i) =
                    kern::gather_dot(cj.idx.data(), cj.val.data(), cj.nnz(), scratch.data());
            }
            kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), -1.0, scratch.data());
        }
        const double ln = spec.lambda * double(n);
        A.diagonal().array() += ln;
        Eigen::VectorXd rhs(n);
        for (std::int64_t i = 0; i < n; ++i) rhs(i) = ln * spec.dataset.labels[std::size_t(i)];
        const Eigen::VectorXd sol = A.ldlt().solve(rhs);
        out.alpha.assign(sol.data(), sol.data() + n);
    } else {
        // cyclic exact coordinate maximization on D itself
        out.alpha.assign(std::size_t(n), 0.0);
        std::vector<double> s(std::size_t(spec.d()), 0.0);  // X alpha
        std::vector<double> col_sq(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) col_sq[std::size_t(i)] = spec.dataset.col_nrm2sq(i);
        const int max_sweeps = 100000;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_step = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                const auto c = spec.dataset.col(i);
                const double xis =
                    kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), s.data());
                const double delta = dual_coordinate_step(spec, i, out.alpha[std::size_t(i)],
                                                          xis, col_sq[std::size_t(i)]);
                if (delta != 0.0) {
                    kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), delta, s.data());
                    out.alpha[std::size_t(i)] += delta;
                    max_step = std::max(max_step, std::abs(delta));
                }
            }
            if (max_step < 1e-14) break;
            if (sweep % 32 == 31) {
                const auto state = make_state(spec, out.alpha);
                if (duality_gap(spec, state) < gap_tol) break;
            }
        }
    }

    const auto state = make_state(spec, out.alpha);
    out.dual_value = dual_value(spec, state);
    out.gap = duality_gap(spec, state);
    return out;
}

std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double step) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = f(x);
        x[i] = saved - step;
        const double down = f(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

std::string dump_counterexample(const std::string& dump_dir, const std::string& check_name,
                                const Dataset& dataset, const InstanceConfig& config,
                                const std::string& detail) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dump_dir, ec);
    const std::string base = dump_dir + "/" + check_name + "_seed" + std::to_string(config.seed);
    serialize_libsvm_file(dataset, base + ".svm");
    std::ofstream meta(base + ".config");
    meta << "# replay: pderm train --data " << base << ".svm --loss "
         << loss_name(config.loss) << " --lambda " << config.lambda << " --machines "
         << config.machines << " --seed " << config.seed << "\n";
    meta << "n=" << config.n << " d=" << config.d << " K=" << config.machines
         << " density=" << config.density << " loss=" << loss_name(config.loss)
         << " lambda=" << config.lambda << " seed=" << config.seed << "\n";
    meta << "detail: " << detail << "\n";
    return base + ".svm (" + detail + ")";
}

bool Report::all_passed() const { return total_failures() == 0; }

std::int64_t Report::total_failures() const {
    std::int64_t total = 0;
    for (const auto& c : checks) total += c.failures;
    return total;
}

namespace {

class Suite {
  public:
    Suite(std::uint64_t seed, const std::string& dump_dir) : seed_(seed) {
        report_.dump_dir = dump_dir;
    }

    CheckResult& check(const std::string& name) {
        for (auto& c : report_.checks)
            if (c.name == name) return c;
        report_.checks.push_back(CheckResult{name, 0, 0, {}});
        return report_.checks.back();
    }

    void record(const std::string& name, bool ok, const Instance& inst,
                const InstanceConfig& cfg, const std::string& detail) {
        auto& c = check(name);
        ++c.trials;
        if (ok) return;
        ++c.failures;
        if (c.first_failure.empty()) {
            c.first_failure = dump(name, inst, cfg, detail);
        }
    }

    Report take() { return std::move(report_); }

  private:
    std::string dump(const std::string& name, const Instance& inst, const InstanceConfig& cfg,
                     const std::string& detail) {
        return dump_counterexample(report_.dump_dir, name, inst.spec.dataset, cfg, detail);
    }

    std::uint64_t seed_;
    Report report_;
};

constexpr Loss kLossCycle[] = {Loss::quadratic, Loss::hinge, Loss::sqhinge, Loss::logistic};

}  // namespace

Report property_suite(std::uint64_t seed, std::int64_t trials, const std::string& dump_dir) {
    Suite suite(seed, dump_dir);
    Rng rng(mix_seed(seed, 0x73756974ULL));  // "suit"

    for (std::int64_t trial = 0; trial < trials; ++trial) {
        InstanceConfig cfg;
        cfg.loss = kLossCycle[trial % 4];
        cfg.n = 8 + std::int64_t(rng.next_below(17));        // 8..24
        cfg.d = 4 + std::int64_t(rng.next_below(13));        // 4..16
        cfg.machines = 1 + std::int64_t(rng.next_below(4));  // 1..4
        cfg.machines = std::min(cfg.machines, cfg.n);
        cfg.density = 0.2 + 0.6 * rng.next_unit();
        cfg.lambda = std::pow(10.0, rng.next_range(-2.0, 0.0));
        cfg.seed = mix_seed(seed, std::uint64_t(trial), 0x696e7374ULL);
        cfg.strategy = PartitionStrategy::random;
        Instance inst = generate_instance(cfg);
        const ProblemSpec& spec = inst.spec;
        const double n = double(spec.n());
        const std::int64_t K = inst.part.machines();
        const auto gamma = loss_constants(cfg.loss);

        // conjugate closed forms against the grid oracle
        {
            bool ok = true;
            std::string detail;
            for (int rep = 0; rep < 4 && ok; ++rep) {
                const double y = rep % 2 == 0 ? 1.0 : -1.0;
                const Interval dom = conjugate_domain(cfg.loss, y);
                const double lo = std::isfinite(dom.lo) ? dom.lo : -3.0;
                const double hi = std::isfinite(dom.hi) ? dom.hi : 3.0;
                double b = rng.next_range(lo, hi);
                if (cfg.loss == Loss::logistic) b = std::clamp(b, lo + 1e-3, hi - 1e-3);
                const double brute = oracle_conjugate(cfg.loss, y, b);
                const double closed = conjugate_value(cfg.loss, y, b);
                if (std::abs(brute - closed) > 1e-6) {
                    ok = false;
                    detail = "conjugate mismatch at b=" + std::to_string(b);
                }
            }
            suite.record("conjugate_grid_oracle", ok, inst, cfg, detail);
        }

        // smoothness of l (curvature oracle) and Lipschitz bound for hinge
        {
            bool ok = true;
            std::string detail;
            for (int rep = 0; rep < 16 && ok; ++rep) {
                const double y = rep % 2 == 0 ? 1.0 : -1.0;
                const double a = rng.next_range(-3.0, 3.0);
                const double h = rng.next_range(-1.0, 1.0);
                if (gamma.has_gamma) {
                    const double lhs = std::abs(loss_value(cfg.loss, y, a + h) -
                                                loss_value(cfg.loss, y, a) -
                                                h * loss_derivative(cfg.loss, y, a));
                    if (lhs > h * h / (2.0 * gamma.gamma) + 1e-9) {
                        ok = false;
                        detail = "smoothness violated at a=" + std::to_string(a);
                    }
                } else {
                    const double diff = std::abs(loss_value(cfg.loss, y, a + h) -
                                                 loss_value(cfg.loss, y, a));
                    if (diff > gamma.lipschitz * std::abs(h) + 1e-12) {
                        ok = false;
                        detail = "Lipschitz bound violated at a=" + std::to_string(a);
                    }
                }
            }
            suite.record("loss_constants_curvature", ok, inst, cfg, detail);
        }

        // gamma-strong convexity of l* on its domain
        if (gamma.has_gamma) {
            bool ok = true;
            std::string detail;
            for (int rep = 0; rep < 16 && ok; ++rep) {
                const double y = rep % 2 == 0 ? 1.0 : -1.0;
                const Interval dom = conjugate_domain(cfg.loss, y);
                const double lo = std::isfinite(dom.lo) ? dom.lo : -3.0;
                const double hi = std::isfinite(dom.hi) ? dom.hi : 3.0;
                const double b1 = rng.next_range(lo, hi), b2 = rng.next_range(lo, hi);
                const double t = rng.next_unit();
                const double mix = t * b1 + (1.0 - t) * b2;
                const double lhs = conjugate_value_unchecked(cfg.loss, y, mix);
                const double rhs = t * conjugate_value_unchecked(cfg.loss, y, b1) +
                                   (1.0 - t) * conjugate_value_unchecked(cfg.loss, y, b2) -
                                   0.5 * gamma.gamma * t * (1.0 - t) * (b1 - b2) * (b1 - b2);
                if (lhs > rhs + 1e-9) {
                    ok = false;
                    detail = "strong convexity violated";
                }
            }
            suite.record("conjugate_strong_convexity", ok, inst, cfg, detail);
        }

        auto alpha = random_feasible_alpha(spec, rng);
        auto hdir = random_feasible_direction(spec, alpha, rng);
        const auto state = make_state(spec, alpha);

        // weak duality
        {
            const double gap = duality_gap(spec, state);
            suite.record("weak_duality", gap >= -1e-9, inst, cfg,
                         "gap=" + std::to_string(gap));
        }

        // smoothness of f: f(alpha+h) <= f(alpha) + <grad f, h> + h'X'Xh/(2 lambda n^2)
        {
            std::vector<double> moved(alpha);
            for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += hdir[i];
            const auto v_moved = compute_v(spec, moved);
            const auto gf = grad_f(spec, state.v);
            double quad = 0.0;
            {
                std::vector<double> xh(std::size_t(spec.d()), 0.0);
                for (std::int64_t i = 0; i < spec.n(); ++i) {
                    const auto c = spec.dataset.col(i);
                    kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), hdir[std::size_t(i)],
                                       xh.data());
                }
                quad = kern::nrm2sq(xh.data(), xh.size());
            }
            const double lhs = dual_f(spec, v_moved);
            const double rhs = dual_f(spec, state.v) +
                               kern::dot(gf.data(), hdir.data(), hdir.size()) +
                               quad / (2.0 * spec.lambda * n * n);
            suite.record("f_smoothness_bound", lhs <= rhs + 1e-9, inst, cfg,
                         "lhs-rhs=" + std::to_string(lhs - rhs));
        }

        // grad f by chain rule vs central differences
        {
            auto f_of_alpha = [&](std::span<const double> a) {
                return dual_f(spec, compute_v(spec, a));
            };
            const auto fd = finite_difference_grad(f_of_alpha, alpha, 1e-5);
            const auto gf = grad_f(spec, state.v);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < fd.size(); ++i) {
                num += (fd[i] - gf[i]) * (fd[i] - gf[i]);
                den += gf[i] * gf[i];
            }
            const bool ok = std::sqrt(num) <= 1e-6 * std::max(1.0, std::sqrt(den));
            suite.record("grad_f_finite_difference", ok, inst, cfg, "rel err too large");
        }

        // subproblems coincide with D at h = 0, and the local smooth gradient
        // matches finite differences
        {
            const double sigma_prime = safe_sigma_prime(1.0, K);
            double gsum = 0.0;
            bool grad_ok = true;
            for (std::int64_t k = 0; k < K; ++k) {
                const auto shard = make_local_shard(spec, inst.part, k);
                const auto& ids = inst.part.assignments[std::size_t(k)];
                std::vector<double> a_loc(ids.size()), h_loc(ids.size());
                for (std::size_t j = 0; j < ids.size(); ++j) {
                    a_loc[j] = alpha[std::size_t(ids[j])];
                    h_loc[j] = 0.25 * hdir[std::size_t(ids[j])];
                }
                const auto view = make_view(shard, state.v, a_loc, sigma_prime);
                gsum += local_objective(view, std::vector<double>(ids.size(), 0.0));

                const auto analytic = local_gradient_smooth_part(view, h_loc);
                auto smooth_part = [&](std::span<const double> hh) {
                    const auto u = shard_times(shard, hh);
                    return -kern::dot(view.grad_block.data(), hh.data(), hh.size()) -
                           0.5 * view.coupling() * kern::nrm2sq(u.data(), u.size());
                };
                const auto fd = finite_difference_grad(smooth_part, h_loc, 1e-5);
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < fd.size(); ++j) {
                    num += (fd[j] - analytic[j]) * (fd[j] - analytic[j]);
                    den += analytic[j] * analytic[j];
                }
                if (std::sqrt(num) > 1e-6 * std::max(1.0, std::sqrt(den))) grad_ok = false;
            }
            const double d_here = dual_value(spec, state);
            suite.record("subproblem_coincides_with_dual", std::abs(gsum - d_here) <= 1e-9,
                         inst, cfg, "sum G_k(0) - D = " + std::to_string(gsum - d_here));
            suite.record("local_gradient_finite_difference", grad_ok, inst, cfg,
                         "rel err too large");
        }

        // block-separable lower bound with the safe sigma' (both aggregation
        // extremes)
        {
            bool ok = true;
            std::string detail;
            for (double nu : {1.0 / double(K), 1.0}) {
                const double sp = safe_sigma_prime(nu, K);
                for (int rep = 0; rep < 10 && ok; ++rep) {
                    auto a2 = random_feasible_alpha(spec, rng);
                    auto h2 = random_feasible_direction(spec, a2, rng);
                    const auto sides = lower_bound_sides(spec, inst.part, nu, sp, a2, h2);
                    if (!(sides.lhs >= sides.rhs - 1e-9)) {
                        ok = false;
                        detail = "nu=" + std::to_string(nu) +
                                 " violation=" + std::to_string(sides.rhs - sides.lhs);
                    }
                }
            }
            suite.record("block_lower_bound", ok, inst, cfg, detail);
        }

        // sigma'_min never exceeds the safe value
        {
            const double nu = rng.next_unit() < 0.5 ? 1.0 / double(K) : 1.0;
            const double spm = sigma_prime_min(spec.dataset, inst.part, nu);
            suite.record("safe_sigma_prime_dominates", spm <= nu * double(K) + 1e-8, inst, cfg,
                         "sigma'_min=" + std::to_string(spm));
        }

        // solver contract: never worsens the local objective, theta in [0,1]
        {
            SolverConfig scfg;
            scfg.id = cfg.loss == Loss::quadratic && trial % 2 == 0 ? SolverId::lbfgs
                                                                    : SolverId::cd;
            scfg.local_iters = 5 + std::int64_t(rng.next_below(20));
            scfg.seed = cfg.seed;
            auto solver = make_solver(scfg, cfg.loss);
            const double sigma_prime = safe_sigma_prime(1.0, K);
            bool ok = true;
            std::string detail;
            for (std::int64_t k = 0; k < K && ok; ++k) {
                const auto shard = make_local_shard(spec, inst.part, k);
                const auto& ids = inst.part.assignments[std::size_t(k)];
                std::vector<double> a_loc(ids.size());
                for (std::size_t j = 0; j < ids.size(); ++j)
                    a_loc[j] = alpha[std::size_t(ids[j])];
                const auto view = make_view(shard, state.v, a_loc, sigma_prime);
                const auto up = solver->solve(view);
                const double g0 =
                    local_objective(view, std::vector<double>(ids.size(), 0.0));
                const double gh = local_objective(view, up.h_local);
                if (gh < g0 - 1e-12) {
                    ok = false;
                    detail = "solver worsened G by " + std::to_string(g0 - gh);
                }
                const double theta = measure_theta(view, up.h_local);
                if (theta < -1e-9 || theta > 1.0 + 1e-9) {
                    ok = false;
                    detail = "theta=" + std::to_string(theta);
                }
            }
            suite.record("solver_no_worsening", ok, inst, cfg, detail);
        }

        // short run: consistency + monotone ascent under the safe sigma'
        {
            RunConfig rc;
            rc.nu = trial % 2 == 0 ? 1.0 : 1.0 / double(K);
            rc.rounds = 5;
            rc.solver.id = SolverId::cd;
            rc.solver.local_iters = 2 * spec.n();
            rc.seed = cfg.seed;
            const auto res = run(spec, inst.part, rc);
            bool ok = state_consistent(spec, res.state, 1e-8);
            std::string detail = ok ? "" : "v drifted from X alpha/(lambda n)";
            for (std::size_t r = 1; r < res.trace.size() && ok; ++r) {
                if (res.trace[r].dual < res.trace[r - 1].dual - 1e-9) {
                    ok = false;
                    detail = "dual decreased at round " + std::to_string(res.trace[r].round);
                }
            }
            suite.record("engine_consistency_and_ascent", ok, inst, cfg, detail);
        }
    }

    return suite.take();
}

void print_report(std::ostream& out, const Report& report) {
    for (const auto& c : report.checks) {
        if (c.failures == 0) {
            out << "PASS  " << c.name << "  (" << c.trials << " trials)\n";
        } else {
            out << "FAIL  " << c.name << "  (" << c.failures << "/" << c.trials
                << " failed; first: " << c.first_failure << ")\n";
        }
    }
    out << (report.all_passed() ? "verify: all checks passed\n"
                                : "verify: FAILURES detected\n");
}

}  // namespace pderm
