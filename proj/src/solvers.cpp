#include "pderm/solvers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "pderm/kernels.hpp"
#include "pderm/random.hpp"

namespace pderm {

SolverId parse_solver_id(const std::string& s) {
    if (s == "cd") return SolverId::cd;
    if (s == "gd") return SolverId::gd;
    if (s == "cg") return SolverId::cg;
    if (s == "lbfgs") return SolverId::lbfgs;
    if (s == "bb") return SolverId::bb;
    if (s == "fista") return SolverId::fista;
    throw std::invalid_argument("unknown solver: " + s);
}

const char* solver_name(SolverId id) {
    switch (id) {
        case SolverId::cd: return "cd";
        case SolverId::gd: return "gd";
        case SolverId::cg: return "cg";
        case SolverId::lbfgs: return "lbfgs";
        case SolverId::bb: return "bb";
        case SolverId::fista: return "fista";
    }
    return "?";
}

void validate_solver_loss(SolverId id, Loss loss) {
    switch (id) {
        case SolverId::cd:
        case SolverId::fista:
            return;  // all losses
        default:
            if (loss != Loss::quadratic)
                throw std::invalid_argument(
                    std::string(solver_name(id)) +
                    " requires the smooth subproblem of the quadratic loss; use cd or fista for " +
                    loss_name(loss));
    }
}

void SolverConfig::validate() const {
    if (local_iters < 1) throw std::invalid_argument("local iteration budget H must be >= 1");
    if (memory < 0) throw std::invalid_argument("lbfgs memory must be >= 1 (0 = default to H)");
    if (!(ls_shrink > 0.0 && ls_shrink < 1.0))
        throw std::invalid_argument("line-search shrink factor must be in (0,1)");
    if (!(ls_initial_step > 0.0)) throw std::invalid_argument("initial step must be positive");
    if (!(ls_sufficient_decrease > 0.0 && ls_sufficient_decrease < 1.0))
        throw std::invalid_argument("sufficient-decrease constant must be in (0,1)");
}

double conjugate_derivative(Loss loss, double y, double b) {
    switch (loss) {
        case Loss::quadratic: return b + y;
        case Loss::hinge: return y;
        case Loss::sqhinge: return 0.5 * b + y;
        case Loss::logistic: {
            const double u = -b / y;
            return -std::log(u / (1.0 - u)) / y;
        }
    }
    return 0.0;
}

namespace {

constexpr double kBoundaryPad = 1e-12;  // keeps logistic iterates off the box edge

struct Coord {
    double beta;   // alpha_j + h_j
    double y;      // label
    double q;      // ||x_j||^2
    double r;      // smooth-part gradient of G at the current point, coordinate j
    double c;      // sigma' / (lambda n^2)
    double inv_n;  // 1/n
};

// argmax over delta of
//   r*delta - (c q/2) delta^2 - (1/n) l*(-(beta+delta))
// closed form per loss, clipped to the dual box; safeguarded Newton for
// logistic (<= 20 Newton steps, bisection fallback).
double coordinate_argmax(Loss loss, const Coord& k) {
    const double cq = k.c * k.q;
    switch (loss) {
        case Loss::quadratic:
            return (k.r - (k.beta - k.y) * k.inv_n) / (cq + k.inv_n);
        case Loss::hinge: {
            if (cq > 0.0) {
                const double target = k.beta + (k.r + k.y * k.inv_n) / cq;
                return std::clamp(target, 0.0, 1.0) - k.beta;
            }
            const double slope = k.r + k.y * k.inv_n;  // objective is linear in delta
            if (slope > 0.0) return 1.0 - k.beta;
            if (slope < 0.0) return -k.beta;
            return 0.0;
        }
        case Loss::sqhinge: {
            const double delta = (k.r - (0.5 * k.beta - k.y) * k.inv_n) / (cq + 0.5 * k.inv_n);
            return std::max(k.beta + delta, 0.0) - k.beta;
        }
        case Loss::logistic: {
            // work on t = beta + delta inside the open box
            const double lo = (k.y > 0 ? 0.0 : -1.0) + kBoundaryPad;
            const double hi = (k.y > 0 ? 1.0 : 0.0) - kBoundaryPad;
            double t = std::clamp(k.beta, lo, hi);
            auto dphi = [&](double tt) {
                const double u = tt / k.y;
                return k.r - cq * (tt - k.beta) - std::log(u / (1.0 - u)) / k.y * k.inv_n;
            };
            double blo = lo, bhi = hi;
            if (dphi(blo) <= 0.0) return blo - k.beta;
            if (dphi(bhi) >= 0.0) return bhi - k.beta;
            for (int it = 0; it < 20; ++it) {
                const double g = dphi(t);
                if (g > 0.0) blo = t; else bhi = t;
                const double u = t / k.y;
                const double curv = cq + (1.0 / u + 1.0 / (1.0 - u)) * k.inv_n;
                double t_next = t + g / curv;
                if (!(t_next > blo && t_next < bhi)) t_next = 0.5 * (blo + bhi);
                if (std::abs(t_next - t) < 1e-15 * (1.0 + std::abs(t))) { t = t_next; break; }
                t = t_next;
            }
            for (int it = 0; it < 60 && bhi - blo > 1e-15; ++it) {
                const double mid = 0.5 * (blo + bhi);
                if (dphi(mid) > 0.0) blo = mid; else bhi = mid;
            }
            t = std::clamp(t, blo, bhi);
            return t - k.beta;
        }
    }
    return 0.0;
}

Coord make_coord(const SubproblemView& view, std::int64_t j, double h_j, double xj_dot_u) {
    const LocalShard& shard = *view.shard;
    Coord k;
    k.beta = view.alpha_local[std::size_t(j)] + h_j;
    k.y = shard.data.labels[std::size_t(j)];
    k.q = shard.col_sq[std::size_t(j)];
    k.c = view.coupling();
    k.r = -view.grad_block[std::size_t(j)] - k.c * xj_dot_u;
    k.inv_n = 1.0 / double(shard.n_global);
    return k;
}

LocalUpdate finish_update(const SubproblemView& view, std::vector<double> h,
                          std::int64_t iterations) {
    const LocalShard& shard = *view.shard;
    LocalUpdate up;
    // no-worsening contract: fall back to h = 0 if the method overshot
    if (local_objective_unchecked(view, h) <
        local_objective_unchecked(view, std::vector<double>(h.size(), 0.0))) {
        std::fill(h.begin(), h.end(), 0.0);
    }
    up.delta_v = shard_times(shard, h);
    kern::scale(up.delta_v.size(), 1.0 / (shard.lambda * double(shard.n_global)),
                up.delta_v.data());
    up.h_local = std::move(h);
    up.inner_iterations = iterations;
    return up;
}

// ---- coordinate descent ----------------------------------------------------

class CdSolver final : public LocalSolver {
  public:
    explicit CdSolver(const SolverConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

    void set_round_seed(std::uint64_t seed) override { rng_ = Rng(seed); }

    LocalUpdate solve(const SubproblemView& view) override {
        const LocalShard& shard = *view.shard;
        const std::int64_t m = shard.size();
        std::vector<double> h(std::size_t(m), 0.0);
        std::vector<double> u(std::size_t(shard.data.d), 0.0);  // X_[k] h
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            const std::int64_t j = std::int64_t(rng_.next_below(std::uint64_t(m)));
            const auto c = shard.data.col(j);
            const double xju = kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), u.data());
            const double delta =
                coordinate_argmax(shard.loss, make_coord(view, j, h[std::size_t(j)], xju));
            if (delta != 0.0) {
                kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), delta, u.data());
                h[std::size_t(j)] += delta;
            }
        }
        return finish_update(view, std::move(h), cfg_.local_iters);
    }

    const char* name() const override { return "cd"; }

  private:
    SolverConfig cfg_;
    Rng rng_;
};

// ---- smooth batch machinery (quadratic loss only) ---------------------------
//
// Minimizes F(h) = -G(h) + const
//               = <g0,h> + (c/2)||X h||^2 + (1/n) sum_j (beta_j^2/2 - y_j beta_j)

struct SmoothProblem {
    const SubproblemView* view;

    double value(std::span<const double> h) const {
        const LocalShard& shard = *view->shard;
        const auto u = shard_times(shard, h);
        double f = kern::dot(view->grad_block.data(), h.data(), h.size());
        f += 0.5 * view->coupling() * kern::nrm2sq(u.data(), u.size());
        const double inv_n = 1.0 / double(shard.n_global);
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double beta = view->alpha_local[j] + h[j];
            f += inv_n * (0.5 * beta * beta - shard.data.labels[j] * beta);
        }
        return f;
    }

    std::vector<double> gradient(std::span<const double> h) const {
        const LocalShard& shard = *view->shard;
        const auto u = shard_times(shard, h);
        auto g = shard_transpose_times(shard, u);
        const double c = view->coupling();
        const double inv_n = 1.0 / double(shard.n_global);
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double beta = view->alpha_local[j] + h[j];
            g[j] = view->grad_block[j] + c * g[j] + inv_n * (beta - shard.data.labels[j]);
        }
        return g;
    }
};

// Armijo backtracking along direction d with directional derivative slope.
// Returns the accepted step (0 if none found) and updates h in place.
double armijo_step(const SmoothProblem& p, std::vector<double>& h, std::span<const double> d,
                   double slope, double f0, double t0, double shrink, double suff) {
    double t = t0;
    std::vector<double> trial(h.size());
    for (int back = 0; back < 60; ++back) {
        for (std::size_t j = 0; j < h.size(); ++j) trial[j] = h[j] + t * d[j];
        if (p.value(trial) <= f0 + suff * t * slope) {
            h = trial;
            return t;
        }
        t *= shrink;
    }
    return 0.0;
}

class GdSolver final : public LocalSolver {
  public:
    explicit GdSolver(const SolverConfig& cfg) : cfg_(cfg) {}

    LocalUpdate solve(const SubproblemView& view) override {
        SmoothProblem p{&view};
        std::vector<double> h(std::size_t(view.size()), 0.0);
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            auto g = p.gradient(h);
            const double gg = kern::nrm2sq(g.data(), g.size());
            if (gg == 0.0) break;
            kern::scale(g.size(), -1.0, g.data());
            armijo_step(p, h, g, -gg, p.value(h), cfg_.ls_initial_step, cfg_.ls_shrink,
                        cfg_.ls_sufficient_decrease);
        }
        return finish_update(view, std::move(h), cfg_.local_iters);
    }

    const char* name() const override { return "gd"; }

  private:
    SolverConfig cfg_;
};

// Fletcher-Reeves with restart every |P_k| iterations and backtracking.
class CgSolver final : public LocalSolver {
  public:
    explicit CgSolver(const SolverConfig& cfg) : cfg_(cfg) {}

    LocalUpdate solve(const SubproblemView& view) override {
        SmoothProblem p{&view};
        const std::size_t m = std::size_t(view.size());
        std::vector<double> h(m, 0.0);
        auto g = p.gradient(h);
        std::vector<double> d(m);
        for (std::size_t j = 0; j < m; ++j) d[j] = -g[j];
        double gg = kern::nrm2sq(g.data(), m);
        std::int64_t since_restart = 0;
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            if (gg == 0.0) break;
            double slope = kern::dot(g.data(), d.data(), m);
            if (slope >= 0.0) {  // not a descent direction: restart
                for (std::size_t j = 0; j < m; ++j) d[j] = -g[j];
                slope = -gg;
                since_restart = 0;
            }
            armijo_step(p, h, d, slope, p.value(h), 1.0, 0.5, 1e-4);
            auto g_new = p.gradient(h);
            const double gg_new = kern::nrm2sq(g_new.data(), m);
            ++since_restart;
            const double beta =
                (since_restart >= view.size() || gg == 0.0) ? 0.0 : gg_new / gg;  // FR
            if (beta == 0.0) since_restart = 0;
            for (std::size_t j = 0; j < m; ++j) d[j] = -g_new[j] + beta * d[j];
            g = std::move(g_new);
            gg = gg_new;
        }
        return finish_update(view, std::move(h), cfg_.local_iters);
    }

    const char* name() const override { return "cg"; }

  private:
    SolverConfig cfg_;
};

// Two-loop recursion, curvature pairs skipped when s'y <= 1e-12, backtracking.
class LbfgsSolver final : public LocalSolver {
  public:
    explicit LbfgsSolver(const SolverConfig& cfg) : cfg_(cfg) {}

    LocalUpdate solve(const SubproblemView& view) override {
        SmoothProblem p{&view};
        const std::size_t m = std::size_t(view.size());
        const std::size_t mem =
            std::size_t(cfg_.memory > 0 ? cfg_.memory : cfg_.local_iters);
        std::vector<double> h(m, 0.0);
        auto g = p.gradient(h);
        std::deque<std::vector<double>> s_hist, y_hist;
        std::deque<double> rho_hist;
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            if (kern::nrm2sq(g.data(), m) == 0.0) break;
            // two-loop recursion
            std::vector<double> d(g);
            std::vector<double> alpha_coef(s_hist.size());
            for (std::size_t idx = s_hist.size(); idx-- > 0;) {
                alpha_coef[idx] = rho_hist[idx] * kern::dot(s_hist[idx].data(), d.data(), m);
                kern::axpy(m, -alpha_coef[idx], y_hist[idx].data(), d.data());
            }
            if (!s_hist.empty()) {
                const auto& s = s_hist.back();
                const auto& yv = y_hist.back();
                const double gamma =
                    kern::dot(s.data(), yv.data(), m) / kern::nrm2sq(yv.data(), m);
                kern::scale(m, gamma, d.data());
            }
            for (std::size_t idx = 0; idx < s_hist.size(); ++idx) {
                const double b = rho_hist[idx] * kern::dot(y_hist[idx].data(), d.data(), m);
                kern::axpy(m, alpha_coef[idx] - b, s_hist[idx].data(), d.data());
            }
            kern::scale(m, -1.0, d.data());
            double slope = kern::dot(g.data(), d.data(), m);
            if (slope >= 0.0) {
                for (std::size_t j = 0; j < m; ++j) d[j] = -g[j];
                slope = -kern::nrm2sq(g.data(), m);
            }
            std::vector<double> h_prev(h);
            armijo_step(p, h, d, slope, p.value(h), 1.0, 0.5, 1e-4);
            auto g_new = p.gradient(h);
            std::vector<double> s(m), yv(m);
            for (std::size_t j = 0; j < m; ++j) {
                s[j] = h[j] - h_prev[j];
                yv[j] = g_new[j] - g[j];
            }
            if (kern::dot(s.data(), yv.data(), m) > 1e-12) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(yv));
                rho_hist.push_back(1.0 /
                                   kern::dot(s_hist.back().data(), y_hist.back().data(), m));
                if (s_hist.size() > mem) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
            g = std::move(g_new);
        }
        return finish_update(view, std::move(h), cfg_.local_iters);
    }

    const char* name() const override { return "lbfgs"; }

  private:
    SolverConfig cfg_;
};

// BB1 step s's / s'y, fixed small step when the quotient is non-positive,
// backtracking safeguard keeps the iterates monotone.
class BbSolver final : public LocalSolver {
  public:
    explicit BbSolver(const SolverConfig& cfg) : cfg_(cfg) {}

    LocalUpdate solve(const SubproblemView& view) override {
        SmoothProblem p{&view};
        const std::size_t m = std::size_t(view.size());
        std::vector<double> h(m, 0.0);
        auto g = p.gradient(h);
        std::vector<double> h_prev, g_prev;
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            const double gg = kern::nrm2sq(g.data(), m);
            if (gg == 0.0) break;
            double step = kFallbackStep;
            if (!h_prev.empty()) {
                double ss = 0.0, sy = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const double s = h[j] - h_prev[j];
                    ss += s * s;
                    sy += s * (g[j] - g_prev[j]);
                }
                if (sy > 0.0 && ss > 0.0) step = ss / sy;
            }
            h_prev = h;
            g_prev = g;
            std::vector<double> d(m);
            for (std::size_t j = 0; j < m; ++j) d[j] = -g[j];
            // try the BB step; shrink until F does not increase
            const double f0 = p.value(h);
            double t = step;
            std::vector<double> trial(m);
            bool moved = false;
            for (int back = 0; back < 60; ++back) {
                for (std::size_t j = 0; j < m; ++j) trial[j] = h[j] + t * d[j];
                if (p.value(trial) <= f0) {
                    h = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
            g = p.gradient(h);
        }
        return finish_update(view, std::move(h), cfg_.local_iters);
    }

    const char* name() const override { return "bb"; }

  private:
    static constexpr double kFallbackStep = 1e-4;
    SolverConfig cfg_;
};

// ---- FISTA ------------------------------------------------------------------
//
// Composite split: smooth coupling <g0,h> + (c/2)||Xh||^2 stepped by 1/L with
// L = c * sigma_top(X_[k]'X_[k]); the separable l* terms go through their prox
// (closed form except logistic), which also enforces the dual box at every
// inner iterate.

class FistaSolver final : public LocalSolver {
  public:
    explicit FistaSolver(const SolverConfig& cfg) : cfg_(cfg) {}

    LocalUpdate solve(const SubproblemView& view) override {
        const LocalShard& shard = *view.shard;
        if (cached_shard_ != &shard) {
            sigma_top_ = sigma_k_shard(shard);
            cached_shard_ = &shard;
        }
        const double lip = std::max(view.coupling() * sigma_top_, 1e-12);
        const double tau = 1.0 / lip;
        const std::size_t m = std::size_t(view.size());
        const double n = double(shard.n_global);

        std::vector<double> x(m, 0.0), x_prev(m, 0.0), z(m, 0.0);
        double t_mom = 1.0;
        for (std::int64_t it = 0; it < cfg_.local_iters; ++it) {
            // gradient of the smooth coupling at the extrapolated point
            const auto u = shard_times(shard, z);
            auto grad = shard_transpose_times(shard, u);
            const double c = view.coupling();
            for (std::size_t j = 0; j < m; ++j)
                grad[j] = view.grad_block[j] + c * grad[j];
            for (std::size_t j = 0; j < m; ++j) {
                const double zj = z[j] - tau * grad[j];
                x[j] = prox(view, j, zj, tau, n);
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
            const double mix = (t_mom - 1.0) / t_next;
            for (std::size_t j = 0; j < m; ++j) z[j] = x[j] + mix * (x[j] - x_prev[j]);
            x_prev = x;
            t_mom = t_next;
        }
        return finish_update(view, std::move(x), cfg_.local_iters);
    }

    const char* name() const override { return "fista"; }

  private:
    // argmin_h (1/(2 tau))(h - z)^2 + (1/n) l*(-(alpha_j + h))
    static double prox(const SubproblemView& view, std::size_t j, double z, double tau,
                       double n) {
        const double alpha = view.alpha_local[j];
        const double y = view.shard->data.labels[j];
        switch (view.shard->loss) {
            case Loss::quadratic:
                return (z / tau + (y - alpha) / n) / (1.0 / tau + 1.0 / n);
            case Loss::hinge:
                return std::clamp(alpha + z + tau * y / n, 0.0, 1.0) - alpha;
            case Loss::sqhinge: {
                const double h = (z / tau + (y - 0.5 * alpha) / n) / (1.0 / tau + 0.5 / n);
                return std::max(alpha + h, 0.0) - alpha;
            }
            case Loss::logistic: {
                // minimize over t = alpha + h: (t - alpha - z)^2/(2 tau) + l*(-t)/n
                const double lo = (y > 0 ? 0.0 : -1.0) + kBoundaryPad;
                const double hi = (y > 0 ? 1.0 : 0.0) - kBoundaryPad;
                const double target = alpha + z;
                auto dpsi = [&](double t) {
                    const double u = t / y;
                    return (t - target) / tau + std::log(u / (1.0 - u)) / y / n;
                };
                double blo = lo, bhi = hi;
                if (dpsi(blo) >= 0.0) return blo - alpha;
                if (dpsi(bhi) <= 0.0) return bhi - alpha;
                double t = std::clamp(target, blo, bhi);
                for (int it = 0; it < 20; ++it) {
                    const double g = dpsi(t);
                    if (g < 0.0) blo = t; else bhi = t;
                    const double u = t / y;
                    const double curv = 1.0 / tau + (1.0 / u + 1.0 / (1.0 - u)) / n;
                    double t_next = t - g / curv;
                    if (!(t_next > blo && t_next < bhi)) t_next = 0.5 * (blo + bhi);
                    if (std::abs(t_next - t) < 1e-15 * (1.0 + std::abs(t))) { t = t_next; break; }
                    t = t_next;
                }
                for (int it = 0; it < 60 && bhi - blo > 1e-15; ++it) {
                    const double mid = 0.5 * (blo + bhi);
                    if (dpsi(mid) < 0.0) blo = mid; else bhi = mid;
                }
                return std::clamp(t, blo, bhi) - alpha;
            }
        }
        return 0.0;
    }

    SolverConfig cfg_;
    const LocalShard* cached_shard_ = nullptr;
    double sigma_top_ = 0.0;
};

// ---- exact reference --------------------------------------------------------

class ExactReferenceSolver final : public LocalSolver {
  public:
    LocalUpdate solve(const SubproblemView& view) override {
        auto h = reference_local_solution(view);
        return finish_update(view, std::move(h), 0);
    }
    const char* name() const override { return "exact"; }
};

}  // namespace

std::unique_ptr<LocalSolver> make_solver(const SolverConfig& config, Loss loss) {
    config.validate();
    validate_solver_loss(config.id, loss);
    switch (config.id) {
        case SolverId::cd: return std::make_unique<CdSolver>(config);
        case SolverId::gd: return std::make_unique<GdSolver>(config);
        case SolverId::cg: return std::make_unique<CgSolver>(config);
        case SolverId::lbfgs: return std::make_unique<LbfgsSolver>(config);
        case SolverId::bb: return std::make_unique<BbSolver>(config);
        case SolverId::fista: return std::make_unique<FistaSolver>(config);
    }
    throw std::logic_error("unreachable");
}

std::unique_ptr<LocalSolver> make_exact_reference_solver() {
    return std::make_unique<ExactReferenceSolver>();
}

double cd_step(const SubproblemView& view, std::int64_t j, std::span<const double> current_h) {
    const auto u = shard_times(*view.shard, current_h);
    const auto c = view.shard->data.col(j);
    const double xju = kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), u.data());
    return coordinate_argmax(view.shard->loss,
                             make_coord(view, j, current_h[std::size_t(j)], xju));
}

namespace {

// 1-D maximizer by bisection on the derivative; shares no argmax algebra with
// coordinate_argmax (the conjugate derivative comes from the loss table).
double bisection_coordinate_step(const SubproblemView& view, std::int64_t j, double h_j,
                                 double xj_dot_u) {
    const LocalShard& shard = *view.shard;
    const double y = shard.data.labels[std::size_t(j)];
    const double beta = view.alpha_local[std::size_t(j)] + h_j;
    const double cq = view.coupling() * shard.col_sq[std::size_t(j)];
    const double r = -view.grad_block[std::size_t(j)] - view.coupling() * xj_dot_u;
    const double inv_n = 1.0 / double(shard.n_global);
    const Interval box = alpha_interval(shard.loss, y);

    auto dphi = [&](double delta) {
        return r - cq * delta + inv_n * conjugate_derivative(shard.loss, y, -(beta + delta));
    };

    double lo, hi;
    if (std::isfinite(box.lo)) lo = box.lo - beta;
    else {
        lo = -1.0;
        while (dphi(lo) > 0.0 && lo > -1e12) lo *= 2.0;
    }
    if (std::isfinite(box.hi)) hi = box.hi - beta;
    else {
        hi = 1.0;
        while (dphi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
    }
    if (shard.loss == Loss::logistic) {
        lo += kBoundaryPad;
        hi -= kBoundaryPad;
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

std::vector<double> reference_local_solution(const SubproblemView& view) {
    const LocalShard& shard = *view.shard;
    const std::int64_t m = shard.size();

    if (shard.loss == Loss::quadratic) {
        // (c X'X + I/n) h = -g0 - (alpha - y)/n, dense
        const double c = view.coupling();
        const double inv_n = 1.0 / double(shard.n_global);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        std::vector<double> scratch(std::size_t(shard.data.d), 0.0);
        for (std::int64_t i = 0; i < m; ++i) {
            const auto ci = shard.data.col(i);
            kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), 1.0, scratch.data());
            for (std::int64_t j = i; j < m; ++j) {
                const auto cj = shard.data.col(j);
                const double prod =
                    kern::gather_dot(cj.idx.data(), cj.val.data(), cj.nnz(), scratch.data());
                A(i, j) = A(j, i) = c * prod;
            }
            A(i, i) += inv_n;
            kern::scatter_axpy(ci.idx.data(), ci.val.data(), ci.nnz(), -1.0, scratch.data());
        }
        Eigen::VectorXd rhs(m);
        for (std::int64_t j = 0; j < m; ++j) {
            rhs(j) = -view.grad_block[std::size_t(j)] -
                     inv_n * (view.alpha_local[std::size_t(j)] - shard.data.labels[std::size_t(j)]);
        }
        const Eigen::VectorXd sol = A.ldlt().solve(rhs);
        return {sol.data(), sol.data() + m};
    }

    // cyclic ascent with exact 1-D steps by derivative bisection
    std::vector<double> h(std::size_t(m), 0.0);
    std::vector<double> u(std::size_t(shard.data.d), 0.0);
    const int max_sweeps = 200000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_step = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            const auto c = shard.data.col(j);
            const double xju = kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), u.data());
            const double delta = bisection_coordinate_step(view, j, h[std::size_t(j)], xju);
            if (delta != 0.0) {
                kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), delta, u.data());
                h[std::size_t(j)] += delta;
                max_step = std::max(max_step, std::abs(delta));
            }
        }
        if (max_step < 1e-13) break;
    }
    return h;
}

double measure_theta(const SubproblemView& view, std::span<const double> h) {
    const auto h_star = reference_local_solution(view);
    const double g_star = local_objective_unchecked(view, h_star);
    const double g_zero =
        local_objective_unchecked(view, std::vector<double>(h.size(), 0.0));
    const double g_h = local_objective_unchecked(view, h);
    const double denom = g_star - g_zero;
    if (denom < 1e-14) return 0.0;
    return (g_star - g_h) / denom;
}

}  // namespace pderm
