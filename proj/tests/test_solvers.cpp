#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pderm/random.hpp"
#include "pderm/solvers.hpp"
#include "pderm/verify.hpp"
#include "test_util.hpp"

using namespace pderm;

namespace {

// heap-allocated so the view's spans stay valid for the fixture's lifetime
struct ViewFixture {
    Instance inst;
    LocalShard shard;
    std::vector<double> alpha;
    std::vector<double> alpha_loc;
    std::vector<double> v;
    SubproblemView view;
};

std::unique_ptr<ViewFixture> make_fixture(Loss loss, std::int64_t n, std::int64_t K,
                                          std::uint64_t seed, double sigma_prime,
                                          std::int64_t k = 0, bool random_alpha = false) {
    InstanceConfig cfg;
    cfg.loss = loss;
    cfg.n = n;
    cfg.d = std::max<std::int64_t>(4, n / 2);
    cfg.machines = K;
    cfg.seed = seed;
    cfg.lambda = 0.2;
    auto out = std::make_unique<ViewFixture>(
        ViewFixture{generate_instance(cfg), {}, {}, {}, {}, {}});
    Rng rng(seed ^ 0xabc);
    out->alpha = random_alpha ? random_feasible_alpha(out->inst.spec, rng)
                              : std::vector<double>(std::size_t(n), 0.0);
    out->shard = make_local_shard(out->inst.spec, out->inst.part, k);
    const auto& ids = out->inst.part.assignments[std::size_t(k)];
    out->alpha_loc.resize(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j)
        out->alpha_loc[j] = out->alpha[std::size_t(ids[j])];
    out->v = compute_v(out->inst.spec, out->alpha);
    out->view = make_view(out->shard, out->v, out->alpha_loc, sigma_prime);
    return out;
}

// independent 1-D oracle: golden-section maximization of the coordinate
// restriction of G
double golden_section_step(const SubproblemView& view, std::int64_t j,
                           std::span<const double> h, double lo, double hi) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    std::vector<double> trial(h.begin(), h.end());
    auto eval = [&](double delta) {
        trial[std::size_t(j)] = h[std::size_t(j)] + delta;
        return local_objective_unchecked(view, trial);
    };
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = eval(c), fd = eval(d);
    for (int it = 0; it < 200; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("solver/loss compatibility is validated before any round") {
    for (SolverId id : {SolverId::gd, SolverId::cg, SolverId::lbfgs, SolverId::bb}) {
        CHECK_THROWS_AS(validate_solver_loss(id, Loss::hinge), std::invalid_argument);
        CHECK_THROWS_AS(validate_solver_loss(id, Loss::logistic), std::invalid_argument);
        CHECK_NOTHROW(validate_solver_loss(id, Loss::quadratic));
    }
    for (Loss loss : {Loss::quadratic, Loss::hinge, Loss::sqhinge, Loss::logistic}) {
        CHECK_NOTHROW(validate_solver_loss(SolverId::cd, loss));
        CHECK_NOTHROW(validate_solver_loss(SolverId::fista, loss));
    }
    SolverConfig bad;
    bad.local_iters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    SolverConfig bad_shrink;
    bad_shrink.ls_shrink = 1.0;
    CHECK_THROWS_AS(bad_shrink.validate(), std::invalid_argument);
}

TEST_CASE("cd_step matches the golden-section oracle") {
    Rng rng(3);
    for (Loss loss : {Loss::quadratic, Loss::hinge, Loss::sqhinge, Loss::logistic}) {
        auto fx = make_fixture(loss, 8, 2, 50 + std::uint64_t(loss), 2.0, 0, true);
        const std::int64_t m = fx->shard.size();
        for (int rep = 0; rep < 8; ++rep) {
            std::vector<double> h(std::size_t(m), 0.0);
            // random interior starting h, kept feasible
            for (std::int64_t j = 0; j < m; ++j) {
                const Interval box =
                    alpha_interval(loss, fx->shard.data.labels[std::size_t(j)]);
                const double lo = std::isfinite(box.lo) ? box.lo : -1.5;
                const double hi = std::isfinite(box.hi) ? box.hi : 1.5;
                const double target =
                    std::clamp(rng.next_range(lo, hi), lo + 1e-6, hi - 1e-6);
                h[std::size_t(j)] = target - fx->alpha_loc[std::size_t(j)];
            }
            const std::int64_t j = std::int64_t(rng.next_below(std::uint64_t(m)));
            const double delta = cd_step(fx->view, j, h);
            // oracle brackets the feasible move for this coordinate
            const Interval box = alpha_interval(loss, fx->shard.data.labels[std::size_t(j)]);
            const double beta = fx->alpha_loc[std::size_t(j)] + h[std::size_t(j)];
            const double lo = (std::isfinite(box.lo) ? box.lo : beta - 8.0) - beta;
            const double hi = (std::isfinite(box.hi) ? box.hi : beta + 8.0) - beta;
            const double oracle = golden_section_step(fx->view, j, h, lo, hi);
            // compare achieved objective values (the argmax may sit at a kink)
            std::vector<double> h1(h), h2(h);
            h1[std::size_t(j)] += delta;
            h2[std::size_t(j)] += oracle;
            const double f1 = local_objective_unchecked(fx->view, h1);
            const double f2 = local_objective_unchecked(fx->view, h2);
            CHECK(f1 >= f2 - 1e-8);
            CHECK(std::abs(delta - oracle) <= 1e-5 * (1.0 + std::abs(oracle)) + 1e-5);
        }
    }
}

TEST_CASE("hinge coordinate at the box boundary with an outward direction stays put") {
    // alpha at the upper bound, ascent still pointing up: delta must be 0
    const Dataset ds = testutil::dense_dataset({{0.1, 0.0}, {0.0, 1.0}}, {1.0, 1.0});
    ProblemSpec spec(ds, Loss::hinge, 2.0);
    const Partition part = make_partition(2, 2, PartitionStrategy::contiguous, 0);
    const auto shard = make_local_shard(spec, part, 0);
    const std::vector<double> alpha_loc{1.0};  // at the boundary
    const std::vector<double> v(2, 0.0);       // no shared pull: gradient favors +delta
    const auto view = make_view(shard, v, alpha_loc, 1.0);
    const std::vector<double> h{0.0};
    CHECK(cd_step(view, 0, h) == 0.0);
}

TEST_CASE("zero data column: the update is driven by the conjugate term alone") {
    Dataset ds;
    ds.n = 2;
    ds.d = 2;
    ds.col_ptr = {0, 0, 1};
    ds.row_idx = {0};
    ds.values = {1.0};
    ds.labels = {1.0, 1.0};
    ProblemSpec spec(ds, Loss::quadratic, 0.5);
    const Partition part = make_partition(2, 1, PartitionStrategy::contiguous, 0);
    const auto shard = make_local_shard(spec, part, 0);
    const std::vector<double> alpha_loc{0.0, 0.0};
    const std::vector<double> v{0.3, 0.0};
    const auto view = make_view(shard, v, alpha_loc, 1.0);
    const std::vector<double> h{0.0, 0.0};
    // coordinate 0 has an empty column: grad_block[0] = 0 and the exact
    // maximizer of -(1/n) l*(-(0+delta)) is delta = y
    CHECK(cd_step(view, 0, h) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("H=1 CD on a 1-point shard solves the 1-D problem exactly") {
    auto fx = make_fixture(Loss::quadratic, 2, 2, 5, 1.0, 0, false);
    REQUIRE(fx->shard.size() == 1);
    SolverConfig cfg;
    cfg.id = SolverId::cd;
    cfg.local_iters = 1;
    auto solver = make_solver(cfg, Loss::quadratic);
    const auto up = solver->solve(fx->view);
    const double oracle = golden_section_step(fx->view, 0, std::vector<double>{0.0}, -6.0, 6.0);
    CHECK(up.h_local[0] == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(measure_theta(fx->view, up.h_local) <= 1e-9);
}

TEST_CASE("long CD runs solve small shards nearly exactly") {
    for (Loss loss : {Loss::quadratic, Loss::logistic}) {
        auto fx = make_fixture(loss, 10, 2, 60 + std::uint64_t(loss), 2.0, 0, true);
        SolverConfig cfg;
        cfg.id = SolverId::cd;
        cfg.local_iters = 10000;
        cfg.seed = 9;
        auto solver = make_solver(cfg, loss);
        const auto up = solver->solve(fx->view);
        CHECK(measure_theta(fx->view, up.h_local) <= 1e-6);
    }
}

TEST_CASE("every solver honors the no-worsening contract") {
    Rng rng(7);
    for (Loss loss : {Loss::quadratic, Loss::hinge, Loss::sqhinge, Loss::logistic}) {
        for (SolverId id :
             {SolverId::cd, SolverId::gd, SolverId::cg, SolverId::lbfgs, SolverId::bb,
              SolverId::fista}) {
            if (loss != Loss::quadratic && id != SolverId::cd && id != SolverId::fista)
                continue;
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                auto fx =
                    make_fixture(loss, 9, 3, 70 + seed + 10 * std::uint64_t(loss), 3.0, 1, true);
                SolverConfig cfg;
                cfg.id = id;
                cfg.local_iters = 1 + std::int64_t(rng.next_below(12));
                cfg.seed = seed;
                auto solver = make_solver(cfg, loss);
                const auto up = solver->solve(fx->view);
                const std::vector<double> zero(up.h_local.size(), 0.0);
                const double g0 = local_objective_unchecked(fx->view, zero);
                const double gh = local_objective_unchecked(fx->view, up.h_local);
                CHECK(gh >= g0 - 1e-12);
                // the final point stays dual-feasible
                for (std::size_t j = 0; j < up.h_local.size(); ++j) {
                    CHECK(alpha_feasible(loss, fx->shard.data.labels[j],
                                         fx->alpha_loc[j] + up.h_local[j], 1e-9));
                }
                // delta_v is recomputable from h
                const auto u = shard_times(fx->shard, up.h_local);
                for (std::size_t r = 0; r < u.size(); ++r) {
                    const double expect =
                        u[r] / (fx->inst.spec.lambda * double(fx->inst.spec.n()));
                    CHECK(std::abs(up.delta_v[r] - expect) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("batch solvers improve monotonically with the iteration budget") {
    for (SolverId id : {SolverId::gd, SolverId::cg, SolverId::lbfgs, SolverId::bb}) {
        auto fx = make_fixture(Loss::quadratic, 12, 2, 90, 2.0, 0, true);
        double prev = -kInf;
        for (std::int64_t budget = 1; budget <= 8; ++budget) {
            SolverConfig cfg;
            cfg.id = id;
            cfg.local_iters = budget;
            auto solver = make_solver(cfg, Loss::quadratic);
            const auto up = solver->solve(fx->view);
            const double g = local_objective_unchecked(fx->view, up.h_local);
            CHECK(g >= prev - 1e-12);
            prev = g;
        }
        // with enough iterations the smooth solvers reach the optimum
        SolverConfig cfg;
        cfg.id = id;
        cfg.local_iters = 400;
        auto solver = make_solver(cfg, Loss::quadratic);
        const auto up = solver->solve(fx->view);
        CHECK(measure_theta(fx->view, up.h_local) <= 1e-6);
    }
}

TEST_CASE("FISTA keeps every inner iterate feasible on hinge") {
    // iterates for budget H are a prefix of budget H+1, so checking the final
    // point across budgets covers each inner iterate
    auto fx = make_fixture(Loss::hinge, 10, 2, 95, 2.0, 0, true);
    for (std::int64_t budget = 1; budget <= 12; ++budget) {
        SolverConfig cfg;
        cfg.id = SolverId::fista;
        cfg.local_iters = budget;
        auto solver = make_solver(cfg, Loss::hinge);
        const auto up = solver->solve(fx->view);
        for (std::size_t j = 0; j < up.h_local.size(); ++j) {
            const double beta = fx->alpha_loc[j] + up.h_local[j];
            CHECK(beta >= -1e-12);
            CHECK(beta <= 1.0 + 1e-12);
        }
    }
    // and converges to the box-constrained optimum
    SolverConfig cfg;
    cfg.id = SolverId::fista;
    cfg.local_iters = 3000;
    auto solver = make_solver(cfg, Loss::hinge);
    const auto up = solver->solve(fx->view);
    CHECK(measure_theta(fx->view, up.h_local) <= 1e-6);
}

TEST_CASE("measure_theta endpoints and ranges") {
    auto fx = make_fixture(Loss::quadratic, 10, 2, 99, 2.0, 0, true);
    const auto h_star = reference_local_solution(fx->view);
    CHECK(std::abs(measure_theta(fx->view, h_star)) <= 1e-10);
    const std::vector<double> zero(h_star.size(), 0.0);
    CHECK(measure_theta(fx->view, zero) == doctest::Approx(1.0).epsilon(1e-12));

    SolverConfig cfg;
    cfg.id = SolverId::cd;
    cfg.local_iters = fx->shard.size();
    cfg.seed = 1;
    auto solver = make_solver(cfg, Loss::quadratic);
    const auto up = solver->solve(fx->view);
    const double theta = measure_theta(fx->view, up.h_local);
    CHECK(theta > 0.0);
    CHECK(theta < 1.0);
}

TEST_CASE("mean theta of one-epoch CD is stable across disjoint seed sets") {
    auto fx = make_fixture(Loss::quadratic, 60, 2, 101, 2.0, 0, true);
    auto mean_theta = [&](std::uint64_t seed0, int count) {
        double sum = 0.0;
        for (int s = 0; s < count; ++s) {
            SolverConfig cfg;
            cfg.id = SolverId::cd;
            cfg.local_iters = fx->shard.size();
            auto solver = make_solver(cfg, Loss::quadratic);
            solver->set_round_seed(mix_seed(seed0, std::uint64_t(s)));
            sum += measure_theta(fx->view, solver->solve(fx->view).h_local);
        }
        return sum / double(count);
    };
    const double small_sample = mean_theta(7, 50);
    const double large_sample = mean_theta(1234, 400);
    CHECK(std::abs(small_sample - large_sample) <= 0.02);
}

TEST_CASE("mean theta never increases as H quadruples") {
    for (Loss loss : {Loss::quadratic, Loss::logistic}) {
        auto fx = make_fixture(loss, 24, 2, 103 + std::uint64_t(loss), 2.0, 0, true);
        const std::int64_t base = fx->shard.size() / 2;
        double prev_mean = kInf;
        for (std::int64_t budget : {base, 4 * base, 16 * base}) {
            double sum = 0.0;
            const int seeds = 30;
            for (int s = 0; s < seeds; ++s) {
                SolverConfig cfg;
                cfg.id = SolverId::cd;
                cfg.local_iters = budget;
                auto solver = make_solver(cfg, loss);
                solver->set_round_seed(mix_seed(11, std::uint64_t(s)));
                sum += measure_theta(fx->view, solver->solve(fx->view).h_local);
            }
            const double mean = sum / double(seeds);
            CHECK(mean <= prev_mean + 1e-12);
            prev_mean = mean;
        }
    }
}
